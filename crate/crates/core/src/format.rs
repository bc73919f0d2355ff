//! Fixed significant-digit number formatting for tabular output.

/// Formats `x` with exactly `digits` significant digits, rounding ties to even
/// on the exact binary value.
///
/// Values whose decimal exponent lies in `[-5, digits)` are written in positional
/// notation, others as `d.ddde±x`. Non-finite values print as `inf`, `-inf`, `nan`.
pub fn sig(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let figures: String = mantissa.chars().filter(|c| *c != '.').collect();
    if x == 0.0 {
        return positional(sign, &figures, 0);
    }
    if exp < -5 || exp >= digits as i32 {
        let exp_sign = if exp < 0 { "-" } else { "+" };
        return format!("{sign}{mantissa}e{exp_sign}{:02}", exp.abs());
    }
    positional(sign, &figures, exp)
}

fn positional(sign: &str, figures: &str, exp: i32) -> String {
    if exp < 0 {
        let zeros = "0".repeat((-exp - 1) as usize);
        return format!("{sign}0.{zeros}{figures}");
    }
    let split = exp as usize + 1;
    if split >= figures.len() {
        format!("{sign}{figures}")
    } else {
        format!("{sign}{}.{}", &figures[..split], &figures[split..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positional_and_scientific() {
        assert_eq!(sig(2.0, 9), "2.00000000");
        assert_eq!(sig(0.0, 3), "0.00");
        assert_eq!(sig(-0.0, 3), "-0.00");
        assert_eq!(sig(1.278_131_410_2, 6), "1.27813");
        assert_eq!(sig(0.000_123_456, 3), "0.000123");
        assert_eq!(sig(1.5e-7, 2), "1.5e-07");
        assert_eq!(sig(123_456.0, 3), "1.23e+05");
        assert_eq!(sig(123.0, 3), "123");
        assert_eq!(sig(-42.125, 4), "-42.12");
        assert_eq!(sig(f64::INFINITY, 3), "inf");
        assert_eq!(sig(f64::NAN, 3), "nan");
    }

    #[test]
    fn ties_round_to_even() {
        assert_eq!(sig(0.125, 2), "0.12");
        assert_eq!(sig(0.375, 2), "0.38");
        assert_eq!(sig(2.5, 1), "2");
        assert_eq!(sig(3.5, 1), "4");
        assert_eq!(sig(12_345.5, 5), "12346");
    }

    #[test]
    fn carry_moves_exponent() {
        assert_eq!(sig(9.999_96, 5), "10.000");
        assert_eq!(sig(99_999.6, 5), "1.0000e+05");
    }

    #[test]
    fn digit_count_is_exact() {
        for &x in &[1.0, 3.25159, 0.007_5, 6.02e23, 9.999e-9, 1.0 / 3.0] {
            for d in 1..=17 {
                let s = sig(x, d);
                let mant = s.split('e').next().unwrap();
                let figs: String = mant.chars().filter(char::is_ascii_digit).collect();
                let figs = figs.trim_start_matches('0');
                let figs = if figs.is_empty() { "0" } else { figs };
                assert_eq!(figs.len(), d, "{x} with {d} digits -> {s}");
            }
        }
    }
}
