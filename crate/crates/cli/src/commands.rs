use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use heatbound_core::bounds::{
    asymptotics, eigen_lower_bounds, harnack_factor, liyau_coeffs, ondiag_bounds, r_of_t, refined_upper, trace_bounds,
    volume_bounds, BoundInputs, Branch,
};
use heatbound_core::config::{ModelConfig, OutputFormat, RunConfig};
use heatbound_core::format::sig;
use heatbound_core::geometry::{curvature_report, GeometryReport, Point, WarpedProductModel};
use heatbound_core::spectral::SpectrumTable;
use heatbound_core::verify::{
    bound_inputs, build_grids, run_suite_with, solve_spectra, SpectrumPair, Verdict, VerificationReport,
};

use crate::output::{write_atomic, Cell, Table};
use crate::{CliError, Command};

/// What a command produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    /// Short human-readable digest for the terminal.
    pub summary: String,
}

struct Context {
    config: RunConfig,
    model: WarpedProductModel,
    geometry: GeometryReport,
    inputs: BoundInputs,
    dir: PathBuf,
    precision: usize,
    files: Vec<PathBuf>,
}

impl Context {
    fn new(config: &RunConfig) -> Result<Self, CliError> {
        let model = config.model.build()?;
        let geometry = curvature_report(&model)?;
        let inputs = bound_inputs(&model, &geometry)?;
        Ok(Self {
            config: config.clone(),
            model,
            geometry,
            inputs,
            dir: PathBuf::from(&config.output.path),
            precision: config.output.precision,
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let path = write_atomic(&self.dir, name, contents)?;
        self.files.push(path);
        Ok(())
    }

    /// Writes `stem.csv` or `stem.json` according to the configured format.
    fn write_table(&mut self, stem: &str, table: &Table) -> Result<(), CliError> {
        match self.config.output.format {
            OutputFormat::Csv => {
                let bytes = table.to_csv(self.precision)?;
                self.write(&format!("{stem}.csv"), &bytes)
            }
            OutputFormat::Json => {
                let bytes = table.to_json(self.precision);
                self.write(&format!("{stem}.json"), &bytes)
            }
        }
    }

    fn s(&self, v: f64) -> String {
        sig(v, self.precision)
    }

    fn table(&self, header: &[&str]) -> Table {
        let mut t = Table::new(header);
        t.meta("n", self.model.n().to_string())
            .meta("rho_eff", self.s(self.inputs.rho))
            .meta("volume", self.s(self.inputs.mu))
            .meta("diameter", self.s(self.inputs.diam));
        t
    }

    fn spectra(&self) -> Result<SpectrumPair, CliError> {
        Ok(solve_spectra(&self.model, &self.config.solver)?)
    }

    fn times(&self, spectrum: Option<&SpectrumTable>) -> Result<Vec<f64>, CliError> {
        Ok(build_grids(&self.config, spectrum, self.inputs.rho, self.model.r_max())?.t)
    }
}

fn spectrum_meta(t: &mut Table, ctx: &Context, spectra: &SpectrumPair) {
    let trunc = spectra.best().truncation();
    t.meta("mesh_points", spectra.best().mesh().cells.to_string())
        .meta("l_max", trunc.l_max.to_string())
        .meta("lambda_cut", ctx.s(trunc.lambda_cut));
}

fn spectrum_table(ctx: &Context, spectra: &SpectrumPair) -> Table {
    let mut t = ctx.table(&["k", "l", "j", "lambda", "multiplicity", "error_estimate"]);
    spectrum_meta(&mut t, ctx, spectra);
    t.meta("config", ctx.config.to_json());
    let best = spectra.best();
    let mut k = 0usize;
    for mode in best.certified_modes() {
        let estimate = spectra.fine.as_ref().and_then(|_| {
            spectra
                .coarse
                .sector(mode.l)
                .find(|m| m.j == mode.j)
                .map(|m| (m.lambda - mode.lambda).abs())
        });
        let mult = best.multiplicity(mode);
        for _ in 0..mult {
            t.push(vec![
                k.into(),
                mode.l.into(),
                mode.j.into(),
                mode.lambda.into(),
                mult.into(),
                estimate.into(),
            ]);
            k += 1;
        }
    }
    t
}

fn trace_table(ctx: &Context, spectra: &SpectrumPair) -> Result<Table, CliError> {
    let mut t = ctx.table(&["t", "trace", "tail_bound", "lower", "upper"]);
    spectrum_meta(&mut t, ctx, spectra);
    t.meta("config", ctx.config.to_json());
    let BoundInputs { n, rho, mu, .. } = ctx.inputs;
    for time in ctx.times(Some(&spectra.coarse))? {
        let tr = spectra.best().heat_trace(time)?;
        let b = trace_bounds(n, rho, mu, time)?;
        t.push(vec![
            time.into(),
            tr.value.into(),
            tr.tail_bound.into(),
            b.lower.into(),
            b.upper.into(),
        ]);
    }
    Ok(t)
}

fn bounds_tables(ctx: &Context) -> Result<(Table, Table), CliError> {
    let inputs = ctx.inputs;
    let BoundInputs { n, rho, mu, diam } = inputs;
    let vol = volume_bounds(n, rho)?;
    let mut t = ctx.table(&[
        "t",
        "liyau_a",
        "liyau_b",
        "ondiag_lower",
        "ondiag_upper",
        "trace_lower",
        "trace_upper",
        "refined_upper",
        "refined_branch",
        "r_of_t",
        "tau",
        "harnack_half_d0",
        "harnack_half_diam",
    ]);
    t.meta("volume_sandwich_bound", ctx.s(vol.sandwich_bound))
        .meta("volume_bishop_bound", ctx.s(vol.bishop_bound))
        .meta("volume_ratio", ctx.s(vol.ratio))
        .meta("config", ctx.config.to_json());
    for time in ctx.times(None)? {
        let c = liyau_coeffs(n, rho, time)?;
        let on = ondiag_bounds(n, rho, mu, time)?;
        let tr = trace_bounds(n, rho, mu, time)?;
        let refined = refined_upper(&inputs, time)?;
        let branch = match refined.branch {
            Branch::SmallTime => "small_time",
            Branch::LargeTime => "large_time",
        };
        t.push(vec![
            time.into(),
            c.a.into(),
            c.b.into(),
            on.lower.into(),
            on.upper.into(),
            tr.lower.into(),
            tr.upper.into(),
            refined.value.into(),
            branch.into(),
            r_of_t(n, rho, time).into(),
            refined.tau.into(),
            harnack_factor(n, rho, 0.5 * time, time, 0.0)?.into(),
            harnack_factor(n, rho, 0.5 * time, time, diam)?.into(),
        ]);
    }

    let mut e = ctx.table(&["k", "bound1", "bound2", "lb1_asym", "lb2_asym", "lb2_leading", "weyl"]);
    e.meta("config", ctx.config.to_json());
    for k in 0..=ctx.config.grids.k_max {
        let b = eigen_lower_bounds(n, rho, diam, k as u64)?;
        let mut row = vec![k.into(), b.bound1.into(), b.bound2.into()];
        if k == 0 {
            row.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]);
        } else {
            let a = asymptotics(&inputs, k as u64)?;
            row.extend([
                a.lb1_asym.into(),
                a.lb2_asym.into(),
                a.lb2_leading.into(),
                a.weyl.into(),
            ]);
        }
        e.push(row);
    }
    Ok((t, e))
}

fn write_report(ctx: &mut Context, report: &VerificationReport) -> Result<(), CliError> {
    let mut json = report.to_json();
    json.push('\n');
    ctx.write("report.json", json.as_bytes())?;
    let mut t = Table::new(&VerificationReport::csv_header());
    t.meta("verdict", format!("{:?}", report.verdict).to_lowercase());
    t.meta("config", ctx.config.to_json());
    for row in report.csv_rows(ctx.precision) {
        t.push(row.into_iter().map(Cell::Text).collect());
    }
    let bytes = t.to_csv(ctx.precision)?;
    ctx.write("report.csv", &bytes)
}

fn model_line(config: &RunConfig) -> String {
    match &config.model {
        ModelConfig::RoundCap { n, rho0, cap_fraction } => {
            format!("round cap, n = {n}, rho0 = {rho0}, cap fraction = {cap_fraction}")
        }
        ModelConfig::Warped { n, r_max, samples } => {
            format!(
                "warped product, n = {n}, r_max = {r_max}, {} warp samples",
                samples.len()
            )
        }
    }
}

fn verdict_digest(ctx: &Context, report: &VerificationReport) -> String {
    let mut out = String::new();
    for agg in &report.aggregates {
        let margin = agg.min_margin.map_or("-".to_string(), |m| ctx.s(m));
        let _ = writeln!(
            out,
            "{:<4} {:<40} {:>6} pass {:>4} fail {:>5} skipped  min margin {}",
            agg.check_id.to_string(),
            agg.check_id.description(),
            agg.passed,
            agg.failed,
            agg.skipped,
            margin
        );
    }
    let _ = writeln!(
        out,
        "verdict: {}",
        if report.verdict == Verdict::Pass {
            "pass"
        } else {
            "fail"
        }
    );
    out
}

fn summary_text(ctx: &Context, spectra: &SpectrumPair, report: &VerificationReport) -> String {
    let g = &ctx.geometry;
    let best = spectra.best();
    let mut out = String::new();
    let _ = writeln!(out, "model: {}", model_line(&ctx.config));
    let _ = writeln!(
        out,
        "geometry: rho_eff = {}, boundary curvature min = {}, volume = {}, diameter = {}{}",
        ctx.s(g.rho_eff),
        ctx.s(g.pi_min),
        ctx.s(g.volume),
        ctx.s(ctx.inputs.diam),
        if g.diameter_exact { "" } else { " (upper estimate)" }
    );
    let _ = writeln!(
        out,
        "spectrum: {} cells{}, l_max = {}, lambda_cut = {}, {} certified eigenvalues",
        spectra.coarse.mesh().cells,
        spectra
            .fine
            .as_ref()
            .map_or(String::new(), |f| format!(" (refined {})", f.mesh().cells)),
        best.truncation().l_max,
        ctx.s(best.truncation().lambda_cut),
        best.sorted().len()
    );
    let head: Vec<String> = best.sorted().iter().take(10).map(|&v| ctx.s(v)).collect();
    let _ = writeln!(out, "lowest eigenvalues: {}", head.join(" "));
    let _ = writeln!(out);
    out.push_str(&verdict_digest(ctx, report));
    for note in &report.notes {
        let _ = writeln!(out, "note: {note}");
    }
    out
}

fn plot_tables(ctx: &Context, spectra: &SpectrumPair, report: &VerificationReport) -> Result<(Table, Table), CliError> {
    let BoundInputs { n, rho, mu, diam } = ctx.inputs;
    let best = spectra.best();
    let mut curves = Table::new(&[
        "t",
        "trace",
        "trace_lower",
        "trace_upper",
        "p_pole",
        "ondiag_lower",
        "ondiag_upper",
        "refined_upper",
    ]);
    let pole = Point::radial(0.0);
    for &time in &report.t_grid {
        let tr = best.heat_trace(time)?;
        let b = trace_bounds(n, rho, mu, time)?;
        let on = ondiag_bounds(n, rho, mu, time)?;
        curves.push(vec![
            time.into(),
            tr.value.into(),
            b.lower.into(),
            b.upper.into(),
            best.heat_kernel(pole, pole, time)?.value.into(),
            on.lower.into(),
            on.upper.into(),
            refined_upper(&ctx.inputs, time)?.value.into(),
        ]);
    }
    let mut eigen = Table::new(&["k", "lambda", "bound1", "bound2", "weyl"]);
    let sorted = best.sorted();
    for (k, &lambda) in sorted.iter().enumerate().take(ctx.config.grids.k_max + 1) {
        let b = eigen_lower_bounds(n, rho, diam, k as u64)?;
        let weyl = if k == 0 {
            Cell::Empty
        } else {
            asymptotics(&ctx.inputs, k as u64)?.weyl.into()
        };
        eigen.push(vec![k.into(), lambda.into(), b.bound1.into(), b.bound2.into(), weyl]);
    }
    Ok((curves, eigen))
}

fn write_meta(ctx: &mut Context, command: Command, started: Instant) -> Result<(), CliError> {
    let files: Vec<String> = ctx
        .files
        .iter()
        .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
        .collect();
    let meta = serde_json::json!({
        "command": command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "threads": rayon::current_num_threads(),
        "elapsed_seconds": started.elapsed().as_secs_f64(),
        "files": files,
    });
    let mut text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    text.push('\n');
    let dir = ctx.dir.clone();
    write_atomic(&dir, "run_meta.json", text.as_bytes())?;
    Ok(())
}

/// Runs one command and writes its artifacts into `config.output.path`.
pub fn execute(command: Command, config: &RunConfig) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let mut ctx = Context::new(config)?;
    let mut exit_code = 0;
    let summary = match command {
        Command::Spectrum => {
            let spectra = ctx.spectra()?;
            let table = spectrum_table(&ctx, &spectra);
            ctx.write_table("spectrum", &table)?;
            let head: Vec<String> = spectra.best().sorted().iter().take(10).map(|&v| ctx.s(v)).collect();
            format!(
                "{} eigenvalues certified; lowest: {}\n",
                spectra.best().sorted().len(),
                head.join(" ")
            )
        }
        Command::Trace => {
            let spectra = ctx.spectra()?;
            let table = trace_table(&ctx, &spectra)?;
            ctx.write_table("trace", &table)?;
            format!("heat trace at {} times\n", table.rows.len())
        }
        Command::Bounds => {
            let (times, eigen) = bounds_tables(&ctx)?;
            ctx.write_table("bounds", &times)?;
            ctx.write_table("eigen_bounds", &eigen)?;
            format!("{} time rows, {} index rows\n", times.rows.len(), eigen.rows.len())
        }
        Command::Verify | Command::Report => {
            let spectra = ctx.spectra()?;
            let report = run_suite_with(&ctx.config, &ctx.model, &ctx.geometry, &spectra)?;
            if report.verdict == Verdict::Fail {
                exit_code = 1;
            }
            write_report(&mut ctx, &report)?;
            if command == Command::Report {
                let text = summary_text(&ctx, &spectra, &report);
                ctx.write("summary.txt", text.as_bytes())?;
                let (curves, eigen) = plot_tables(&ctx, &spectra, &report)?;
                let (c, e) = (curves.to_dat(ctx.precision), eigen.to_dat(ctx.precision));
                ctx.write("curves.dat", &c)?;
                ctx.write("eigen.dat", &e)?;
                text
            } else {
                verdict_digest(&ctx, &report)
            }
        }
    };
    write_meta(&mut ctx, command, started)?;
    Ok(Outcome {
        exit_code,
        files: ctx.files,
        summary,
    })
}
