/// Renders `x` with six significant digits, like C's `%.6g`.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // `{:e}` does the rounding; the exponent it reports is post-rounding.
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Number rendering policy for one invocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NumberStyle {
    pub raw: bool,
}

impl NumberStyle {
    pub fn real(&self, x: f64) -> String {
        if self.raw {
            format!("{x:?}")
        } else {
            sig6(x)
        }
    }

    pub fn count(&self, n: u64) -> String {
        if self.raw {
            n.to_string()
        } else {
            sig6(n as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        let cases = [
            (84.0, "84"),
            (235.0, "235"),
            (12737.25, "12737.2"),
            (15549.75, "15549.8"),
            (123456.0, "123456"),
            (1234567.0, "1.23457e+06"),
            (999999.5, "1e+06"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-2.5, "-2.5"),
            (9.605e-6, "9.605e-06"),
            (1.4671e13, "1.4671e+13"),
            (0.1 + 0.2, "0.3"),
        ];
        for (x, want) in cases {
            assert_eq!(sig6(x), want, "{x}");
        }
    }

    #[test]
    fn raw_keeps_every_digit() {
        let raw = NumberStyle { raw: true };
        assert_eq!(raw.real(0.1 + 0.2), "0.30000000000000004");
        assert_eq!(raw.real(2393.0), "2393.0");
        assert_eq!(raw.count(12_345_678_901), "12345678901");
        assert_eq!(NumberStyle::default().count(12_345_678_901), "1.23457e+10");
    }
}
