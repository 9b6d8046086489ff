use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `m = dof^(−1/dim)`.
pub fn notional_mesh_size(dof: usize, dim: u32) -> Result<f64> {
    if dof == 0 {
        return Err(Error::Argument("notional mesh size needs at least one DoF".into()));
    }
    if !(dim == 2 || dim == 3) {
        return Err(Error::Argument(format!("dimension must be 2 or 3, got {dim}")));
    }
    Ok((dof as f64).powf(-1.0 / dim as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub dof: usize,
    pub m: f64,
    pub value: f64,
    pub estimator: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub dim: u32,
    pub rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    pub fn new(dim: u32) -> Self {
        Self { dim, rows: Vec::new() }
    }

    pub fn push(&mut self, dof: usize, value: f64, estimator: f64, seconds: f64) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if dof <= last.dof {
                return Err(Error::Argument(format!("DoF must increase along a trace ({} then {dof})", last.dof)));
            }
        }
        let m = notional_mesh_size(dof, self.dim)?;
        self.rows.push(TraceRow { iter: self.rows.len(), dof, m, value, estimator, seconds });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,dof,m,value,estimator,seconds\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{:e},{:e},{}\n", r.iter, r.dof, r.m, r.value, r.estimator, r.seconds));
        }
        out
    }

    /// CSV without the wall-time column, stable across runs.
    pub fn to_csv_without_timing(&self) -> String {
        let mut out = String::from("iter,dof,m,value,estimator\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{:e},{:e}\n", r.iter, r.dof, r.m, r.value, r.estimator));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub value_inf: f64,
    /// `None` when the values do not change, so no rate is defined.
    pub rate: Option<f64>,
    pub coefficient: f64,
    /// RMS fit residual relative to |value_inf|.
    pub residual: f64,
    pub points: usize,
}

/// Rows used by [`extrapolate`] when the trace is longer.
pub const EXTRAPOLATION_WINDOW: usize = 5;

const RATE_RANGE: (f64, f64) = (0.05, 10.0);

/// For fixed p the model is linear in (v∞, C).
fn linear_fit(m: &[f64], v: &[f64], p: f64) -> (f64, f64, f64) {
    let n = m.len() as f64;
    let x: Vec<f64> = m.iter().map(|mi| mi.powf(p)).collect();
    let (sx, sv) = (x.iter().sum::<f64>(), v.iter().sum::<f64>());
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let sxv: f64 = x.iter().zip(v).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    let c = if det.abs() > 0.0 { (n * sxv - sx * sv) / det } else { 0.0 };
    let v0 = (sv - c * sx) / n;
    let ssr = x.iter().zip(v).map(|(a, b)| (b - v0 - c * a).powi(2)).sum();
    (v0, c, ssr)
}

/// Least-squares fit of `value = v∞ + C·m^p` to the last rows of a trace.
pub fn extrapolate(trace: &ConvergenceTrace) -> Result<Extrapolation> {
    let start = trace.rows.len().saturating_sub(EXTRAPOLATION_WINDOW);
    let rows = &trace.rows[start..];
    let m: Vec<f64> = rows.iter().map(|r| r.m).collect();
    let v: Vec<f64> = rows.iter().map(|r| r.value).collect();
    extrapolate_points(&m, &v)
}

pub fn extrapolate_points(m: &[f64], v: &[f64]) -> Result<Extrapolation> {
    if m.len() != v.len() || m.len() < 3 {
        return Err(Error::Fit(format!("extrapolation needs at least 3 (m, value) pairs, got {}", m.len().min(v.len()))));
    }
    if m.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::Fit("mesh sizes must be positive".into()));
    }
    let (mmin, mmax) = m.iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
    if mmax - mmin <= 1e-12 * mmax {
        return Err(Error::Fit("all rows share the same mesh size".into()));
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let spread = v.iter().fold(0.0f64, |a, x| a.max((x - mean).abs()));
    let scale = mean.abs().max(f64::MIN_POSITIVE);
    if spread <= 1e-14 * scale {
        return Ok(Extrapolation { value_inf: v[v.len() - 1], rate: None, coefficient: 0.0, residual: 0.0, points: v.len() });
    }

    // coarse log-spaced scan, then golden-section refinement around the best
    let ssr = |p: f64| linear_fit(m, v, p).2;
    let (lo, hi) = (RATE_RANGE.0.ln(), RATE_RANGE.1.ln());
    let samples = 400;
    let grid: Vec<f64> = (0..=samples).map(|i| (lo + (hi - lo) * i as f64 / samples as f64).exp()).collect();
    let best = (0..grid.len()).min_by(|&a, &b| ssr(grid[a]).total_cmp(&ssr(grid[b]))).unwrap();
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(samples)]);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (ssr(c), ssr(d));
    while b - a > 1e-12 * b.max(1.0) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = ssr(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = ssr(d);
        }
    }
    let p = 0.5 * (a + b);
    let (v0, coef, s) = linear_fit(m, v, p);
    Ok(Extrapolation {
        value_inf: v0,
        rate: Some(p),
        coefficient: coef,
        residual: (s / v.len() as f64).sqrt() / v0.abs().max(f64::MIN_POSITIVE),
        points: v.len(),
    })
}
