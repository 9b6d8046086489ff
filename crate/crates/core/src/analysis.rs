//! Simulation-versus-measurement error metrics and strong-scaling fits.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub simulated: f64,
    pub measured: f64,
    #[serde(default)]
    pub unit: String,
}

impl ComparisonRow {
    pub fn new(label: &str, simulated: f64, measured: f64, unit: &str) -> Self {
        Self { label: label.into(), simulated, measured, unit: unit.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RmseMode {
    Absolute,
    /// Relative to the measured value, in percent.
    Percentage,
}

pub fn rmse(rows: &[ComparisonRow], mode: RmseMode) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::Argument("RMSE needs at least one row".into()));
    }
    if let Some(r) = rows.iter().find(|r| r.unit != rows[0].unit) {
        return Err(Error::Argument(format!("row {:?} uses unit {:?}, expected {:?}", r.label, r.unit, rows[0].unit)));
    }
    let terms = rows.iter().map(|r| match mode {
        RmseMode::Absolute => Ok(r.simulated - r.measured),
        RmseMode::Percentage if r.measured == 0.0 => {
            Err(Error::Argument(format!("row {:?} has a zero measured value", r.label)))
        }
        RmseMode::Percentage => Ok((r.simulated - r.measured) / r.measured),
    });
    let mut sum = 0.0;
    for t in terms {
        sum += t?.powi(2);
    }
    let root = (sum / rows.len() as f64).sqrt();
    Ok(match mode {
        RmseMode::Absolute => root,
        RmseMode::Percentage => 100.0 * root,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingSample {
    pub workers: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmdahlFit {
    /// Single-worker time T1.
    pub t1_seconds: f64,
    /// Parallel fraction f ∈ [0, 1].
    pub parallel_fraction: f64,
    /// RMS residual relative to the mean sample time.
    pub residual: f64,
}

impl AmdahlFit {
    pub fn predict(&self, workers: usize) -> f64 {
        self.t1_seconds * ((1.0 - self.parallel_fraction) + self.parallel_fraction / workers as f64)
    }
}

/// Least-squares fit of T(N) = T1((1 − f) + f/N).
///
/// The model is linear in a = T1(1 − f) and b = T1·f on the basis (1, 1/N);
/// both are kept non-negative so f stays in [0, 1].
pub fn amdahl_fit(samples: &[ScalingSample]) -> Result<AmdahlFit> {
    if samples.len() < 3 {
        return Err(Error::Fit(format!("Amdahl fit needs at least 3 samples, got {}", samples.len())));
    }
    for s in samples {
        if s.workers == 0 || !(s.seconds > 0.0 && s.seconds.is_finite()) {
            return Err(Error::Argument(format!("invalid sample (N = {}, T = {})", s.workers, s.seconds)));
        }
    }
    let first = samples[0].workers;
    if samples.iter().all(|s| s.workers == first) {
        return Err(Error::Fit("all samples share one worker count".into()));
    }
    let n = samples.len() as f64;
    let x: Vec<f64> = samples.iter().map(|s| 1.0 / s.workers as f64).collect();
    let t: Vec<f64> = samples.iter().map(|s| s.seconds).collect();
    let sx: f64 = x.iter().sum();
    let st: f64 = t.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxt: f64 = x.iter().zip(&t).map(|(a, b)| a * b).sum();
    let ssr = |a: f64, b: f64| x.iter().zip(&t).map(|(xi, ti)| (ti - a - b * xi).powi(2)).sum::<f64>();

    let det = n * sxx - sx * sx;
    let b = (n * sxt - sx * st) / det;
    let a = (st - b * sx) / n;
    let (a, b) = if a >= 0.0 && b >= 0.0 {
        (a, b)
    } else {
        // best fit on each face of the feasible quadrant
        let serial = (st / n, 0.0);
        let parallel = (0.0, sxt / sxx);
        if ssr(serial.0, serial.1) <= ssr(parallel.0, parallel.1) {
            serial
        } else {
            parallel
        }
    };
    let t1 = a + b;
    let residual = (ssr(a, b) / n).sqrt() / (st / n);
    Ok(AmdahlFit { t1_seconds: t1, parallel_fraction: b / t1, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pair() {
        let rows = [ComparisonRow::new("x", 5.0, 4.0, "MHz")];
        assert_eq!(rmse(&rows, RmseMode::Absolute).unwrap(), 1.0);
        assert_eq!(rmse(&rows, RmseMode::Percentage).unwrap(), 25.0);
    }

    #[test]
    fn zero_measured_rejected() {
        let rows = [ComparisonRow::new("x", 5.0, 0.0, "MHz")];
        assert!(rmse(&rows, RmseMode::Percentage).is_err());
        assert_eq!(rmse(&rows, RmseMode::Absolute).unwrap(), 5.0);
    }

    #[test]
    fn mixed_units_rejected() {
        let rows = [ComparisonRow::new("a", 1.0, 1.0, "MHz"), ComparisonRow::new("b", 1.0, 1.0, "GHz")];
        assert!(rmse(&rows, RmseMode::Absolute).is_err());
    }

    fn samples(f: impl Fn(usize) -> f64) -> Vec<ScalingSample> {
        [1, 2, 4, 8].iter().map(|&w| ScalingSample { workers: w, seconds: f(w) }).collect()
    }

    #[test]
    fn boundary_models() {
        let perfect = amdahl_fit(&samples(|n| 100.0 / n as f64)).unwrap();
        assert!((perfect.parallel_fraction - 1.0).abs() < 1e-12);
        assert!((perfect.t1_seconds - 100.0).abs() < 1e-9);
        let serial = amdahl_fit(&samples(|_| 50.0)).unwrap();
        assert!(serial.parallel_fraction.abs() < 1e-12);
        assert!((serial.t1_seconds - 50.0).abs() < 1e-9);
    }

    #[test]
    fn superlinear_data_is_clamped() {
        let fit = amdahl_fit(&samples(|n| 100.0 / (n * n) as f64)).unwrap();
        assert!((0.0..=1.0).contains(&fit.parallel_fraction));
    }

    #[test]
    fn one_worker_count_is_degenerate() {
        let s = vec![ScalingSample { workers: 4, seconds: 1.0 }; 3];
        assert!(matches!(amdahl_fit(&s), Err(Error::Fit(_))));
    }
}
