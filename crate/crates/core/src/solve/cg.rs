use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::precond;
use crate::parallel::{axpy, current_workers, dot, norm2, xpby};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Relative residual target ‖Ax − b‖ / ‖b‖.
    pub tol: f64,
    pub max_iter: usize,
    pub preconditioner: String,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 20_000, preconditioner: precond::DEFAULT_PRECONDITIONER.to_string() }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative residual recomputed from the returned iterate.
    pub residual: f64,
    pub seconds: f64,
    pub workers: usize,
    /// Recursive relative residual after each iteration.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub residual_history: Vec<f64>,
    /// Energy functional ½xᵀAx − bᵀx after each iteration; CG decreases it
    /// monotonically.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub energy_history: Vec<f64>,
}

/// Preconditioned conjugate gradients from a zero initial guess.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], opts: &SolveOptions) -> Result<(Vec<f64>, SolveReport)> {
    let start = Instant::now();
    let n = a.dim();
    if b.len() != n {
        return Err(Error::Argument(format!("right-hand side has length {} for a {n}×{n} matrix", b.len())));
    }
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(Error::Argument(format!("tolerance must lie in (0, 1), got {}", opts.tol)));
    }
    let mut report = SolveReport { workers: current_workers(), ..Default::default() };
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        report.seconds = start.elapsed().as_secs_f64();
        return Ok((vec![0.0; n], report));
    }
    let pc = precond::build(&opts.preconditioner, a)?;

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    pc.apply(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut energy = 0.0;
    let mut rel = 1.0;

    for it in 1..=opts.max_iter {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Argument(format!("matrix is not positive definite (pᵀAp = {pap:e} at iteration {it})")));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        energy -= 0.5 * alpha * rz;
        rel = norm2(&r) / bnorm;
        report.iterations = it;
        report.residual_history.push(rel);
        // ½xᵀAx − bᵀx drops by ½α·rᵀz per step
        report.energy_history.push(energy);
        if rel <= opts.tol {
            break;
        }
        pc.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        xpby(&z, rz_new / rz, &mut p);
        rz = rz_new;
    }

    let ax = a.matvec(&x);
    let true_res: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    report.residual = norm2(&true_res) / bnorm;
    report.seconds = start.elapsed().as_secs_f64();
    if rel > opts.tol || report.residual > opts.tol * 10.0 {
        return Err(Error::NonConvergence { iterations: report.iterations, residual: report.residual.max(rel) });
    }
    Ok((x, report))
}
