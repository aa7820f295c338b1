use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Outcome of a two-sided paired Student t-test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub n: usize,
    pub mean_diff: f64,
}

/// Two-sided paired t-test on `a - b` with `n - 1` degrees of freedom.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::Mismatch(format!(
            "paired samples have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidArgument("paired t-test needs at least 2 pairs".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (mean, sd) = mean_std(&diffs);
    if !(sd > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let t = mean / (sd / (n as f64).sqrt());
    let p = two_sided_p(t, (n - 1) as f64);
    Ok(TTest { t, p, n, mean_diff: mean })
}

fn student(df: f64) -> StudentsT {
    StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom")
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn two_sided_p(t: f64, df: f64) -> f64 {
    (2.0 * student(df).sf(t.abs())).min(1.0)
}

/// `c` with `P(|T| >= c) = alpha`.
pub fn two_sided_critical_value(df: f64, alpha: f64) -> f64 {
    student(df).inverse_cdf(1.0 - alpha / 2.0)
}

/// Mean and sample standard deviation (`n - 1` denominator; zero for a
/// single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

const DECIMALS_WITHOUT_STD: usize = 4;

/// `value(std)` with the standard deviation in units of the last printed
/// digit, e.g. `0.39(7)` for `0.39 +- 0.07`.
///
/// By default the value is printed to the decimal place of the leading
/// digit of `std`; `decimals` overrides that. A zero `std` prints the value
/// alone.
pub fn format_mean_std(mean: f64, std: f64, decimals: Option<usize>) -> String {
    if !(std > 0.0) || !std.is_finite() {
        return format!("{:.*}", decimals.unwrap_or(DECIMALS_WITHOUT_STD), mean);
    }
    let mut places = decimals.unwrap_or_else(|| (-std.log10().floor()).max(0.0) as usize);
    let mut units = (std * 10f64.powi(places as i32)).round();
    // 0.096 rounds to "10" at two places; show "(1)" at one place instead
    if decimals.is_none() && units >= 10.0 && places > 0 && std < 1.0 {
        places -= 1;
        units = (std * 10f64.powi(places as i32)).round();
    }
    format!("{:.*}({})", places, mean, units as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_formatting() {
        assert_eq!(format_mean_std(0.39, 0.07, None), "0.39(7)");
        assert_eq!(format_mean_std(4.5, 0.4, None), "4.5(4)");
        assert_eq!(format_mean_std(26.06, 0.0, Some(2)), "26.06");
        assert_eq!(format_mean_std(0.0, 0.0, None), "0.0000");
        assert_eq!(format_mean_std(12.3, 3.2, None), "12(3)");
        assert_eq!(format_mean_std(0.512, 0.096, None), "0.5(1)");
        assert_eq!(format_mean_std(0.3912, 0.0712, Some(3)), "0.391(71)");
    }

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
    }

    #[test]
    fn critical_value_of_nine_dof() {
        assert!((two_sided_critical_value(9.0, 0.05) - 2.262).abs() < 1e-3);
        let c = two_sided_critical_value(9.0, 0.05);
        assert!((two_sided_p(c, 9.0) - 0.05).abs() < 1e-10);
    }

    #[test]
    fn hand_computed_t_statistic() {
        // diffs 1, 2, 3: mean 2, sd 1, t = 2 sqrt(3)
        let t = paired_t_test(&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((t.t - 2.0 * 3f64.sqrt()).abs() < 1e-14);
        assert_eq!(t.n, 3);
        assert_eq!(t.mean_diff, 2.0);
    }

    #[test]
    fn errors_and_limits() {
        assert!(matches!(paired_t_test(&[1.0, 2.0], &[1.0, 2.0]), Err(Error::ZeroVariance)));
        assert!(paired_t_test(&[1.0], &[2.0]).is_err());
        assert!(paired_t_test(&[1.0, 2.0], &[2.0]).is_err());
        let a: Vec<f64> = (0..10).map(|i| 5.0 + 1e-6 * i as f64).collect();
        let b = vec![0.0; 10];
        assert!(paired_t_test(&a, &b).unwrap().p < 1e-20);
    }
}
