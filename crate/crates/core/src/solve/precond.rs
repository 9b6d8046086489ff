//! Preconditioners for the conjugate-gradient solver, selectable by name.

use rayon::prelude::*;

use crate::sparse::CsrMatrix;
use crate::{Error, Result};

pub trait Preconditioner: Send + Sync {
    fn name(&self) -> &'static str;
    /// `z = P⁻¹ r`
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

type Constructor = fn(&CsrMatrix) -> Result<Box<dyn Preconditioner>>;

const REGISTRY: &[(&str, Constructor)] = &[
    ("jacobi", |a| Ok(Box::new(Jacobi::new(a)?))),
    ("sgs", |a| Ok(Box::new(SymmetricGaussSeidel::new(a)?))),
    ("none", |_| Ok(Box::new(Identity))),
];

pub const DEFAULT_PRECONDITIONER: &str = "jacobi";

pub fn available() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

/// Builds the preconditioner registered under `name`.
pub fn build(name: &str, a: &CsrMatrix) -> Result<Box<dyn Preconditioner>> {
    let (_, ctor) = REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Config(format!("unknown preconditioner {name:?}; available: {:?}", available())))?;
    ctor(a)
}

fn checked_diagonal(a: &CsrMatrix) -> Result<Vec<f64>> {
    let d = a.diagonal();
    if let Some(i) = d.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Argument(format!("matrix diagonal entry {i} is not positive ({})", d[i])));
    }
    Ok(d)
}

pub struct Identity;

impl Preconditioner for Identity {
    fn name(&self) -> &'static str {
        "none"
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        Ok(Self { inv_diag: checked_diagonal(a)?.into_iter().map(|d| 1.0 / d).collect() })
    }
}

impl Preconditioner for Jacobi {
    fn name(&self) -> &'static str {
        "jacobi"
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.par_iter_mut().zip(r.par_iter().zip(self.inv_diag.par_iter())).for_each(|(zi, (ri, di))| *zi = ri * di);
    }
}

/// One forward and one backward Gauss–Seidel sweep (sequential).
pub struct SymmetricGaussSeidel {
    a: CsrMatrix,
    diag: Vec<f64>,
}

impl SymmetricGaussSeidel {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        Ok(Self { diag: checked_diagonal(a)?, a: a.clone() })
    }
}

impl Preconditioner for SymmetricGaussSeidel {
    fn name(&self) -> &'static str {
        "sgs"
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = r.len();
        z.iter_mut().for_each(|v| *v = 0.0);
        // forward: (D + L) y = r
        for i in 0..n {
            let (cols, vals) = self.a.row(i);
            let mut s = r[i];
            for (c, v) in cols.iter().zip(vals) {
                if *c < i {
                    s -= v * z[*c];
                }
            }
            z[i] = s / self.diag[i];
        }
        // scale by D, then backward: (D + U) z = D y
        for (zi, d) in z.iter_mut().zip(&self.diag) {
            *zi *= d;
        }
        for i in (0..n).rev() {
            let (cols, vals) = self.a.row(i);
            let mut s = z[i];
            for (c, v) in cols.iter().zip(vals) {
                if *c > i {
                    s -= v * z[*c];
                }
            }
            z[i] = s / self.diag[i];
        }
    }
}
