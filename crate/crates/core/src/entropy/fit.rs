//! Finite-horizon growth-rate fits.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Exponential,
    Polynomial,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Exponential => "exponential",
            Verdict::Polynomial => "polynomial",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    /// Slope of `log y` against `x` over the window.
    pub rate: f64,
    pub rate_stderr: f64,
    /// Abscissae of the first and last points of the window.
    pub window: (f64, f64),
    /// RMS residual of the semilog fit.
    pub residual: f64,
    /// Slope and RMS residual of `log y` against `log x`.
    pub loglog_slope: f64,
    pub loglog_residual: f64,
    pub verdict: Verdict,
}

/// `(slope, stderr, rms residual)` of an ordinary least-squares line.
fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let stderr = if x.len() > 2 { (ssr / (n - 2.0) / sxx).sqrt() } else { f64::INFINITY };
    (slope, stderr, (ssr / n).sqrt())
}

/// Fits `y ≈ C e^{rate·x}` over the trailing `window` points and decides
/// between exponential and polynomial growth.
///
/// The polynomial test runs first: if the log-log residual is at most half the
/// semilog one the verdict is polynomial regardless of the semilog slope.
/// Otherwise the series is exponential when `rate > 3·stderr` and
/// `rate > 0.05`.
pub fn fit_growth(x: &[f64], y: &[f64], window: usize) -> Result<GrowthFit> {
    if x.len() != y.len() {
        return Err(LabError::InvalidInput("abscissa and series lengths differ".into()));
    }
    if window < 3 || window > y.len() {
        return Err(LabError::InvalidInput(format!(
            "window must satisfy 3 ≤ window ≤ {}, got {window}",
            y.len()
        )));
    }
    if let Some(bad) = y.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(LabError::InvalidInput(format!("series entries must be positive, got {bad}")));
    }
    let xs = &x[x.len() - window..];
    if xs.iter().any(|v| !(*v > 0.0 && v.is_finite())) || xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(LabError::InvalidInput("abscissae must be positive and increasing".into()));
    }
    let logy: Vec<f64> = y[y.len() - window..].iter().map(|v| v.ln()).collect();
    let logx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let (rate, rate_stderr, residual) = least_squares(xs, &logy);
    let (loglog_slope, _, loglog_residual) = least_squares(&logx, &logy);
    let verdict = if 2.0 * loglog_residual <= residual {
        Verdict::Polynomial
    } else if rate > 3.0 * rate_stderr && rate > 0.05 {
        Verdict::Exponential
    } else {
        Verdict::Inconclusive
    };
    Ok(GrowthFit {
        rate,
        rate_stderr,
        window: (xs[0], xs[window - 1]),
        residual,
        loglog_slope,
        loglog_residual,
        verdict,
    })
}

/// [`fit_growth`] with abscissae `1, 2, …, len`.
pub fn fit_exponential_rate(series: &[f64], window: usize) -> Result<GrowthFit> {
    let x: Vec<f64> = (1..=series.len()).map(|i| i as f64).collect();
    fit_growth(&x, series, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pure_exponential() {
        let s: Vec<f64> = (1..=20).map(|n| (0.7 * n as f64).exp()).collect();
        let fit = fit_exponential_rate(&s, 10).unwrap();
        assert!((fit.rate - 0.7).abs() < 1e-9);
        assert_eq!(fit.verdict, Verdict::Exponential);
        assert_eq!(fit.window, (11.0, 20.0));
    }

    #[test]
    fn quadratic_is_polynomial_with_vanishing_rate() {
        let mut last = f64::INFINITY;
        for len in [20, 100, 400] {
            let s: Vec<f64> = (1..=len).map(|n| (n * n) as f64).collect();
            let fit = fit_exponential_rate(&s, 10).unwrap();
            assert_eq!(fit.verdict, Verdict::Polynomial);
            assert!((fit.loglog_slope - 2.0).abs() < 1e-9);
            assert!(fit.rate < last);
            last = fit.rate;
        }
        assert!(last < 0.01);
    }

    #[test]
    fn noisy_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s: Vec<f64> = (1..=30)
            .map(|n| (0.5 * n as f64).exp() * (1.0 + 0.1 * rng.gen_range(-1.0..1.0)))
            .collect();
        let fit = fit_exponential_rate(&s, 20).unwrap();
        assert!((fit.rate - 0.5).abs() <= 0.05);
        assert_eq!(fit.verdict, Verdict::Exponential);
    }

    #[test]
    fn rejects_bad_series() {
        assert!(fit_exponential_rate(&[1.0, 0.0, 2.0], 3).is_err());
        assert!(fit_exponential_rate(&[1.0, 2.0], 2).is_err());
        assert!(fit_exponential_rate(&[1.0, 2.0, 3.0], 4).is_err());
    }
}
