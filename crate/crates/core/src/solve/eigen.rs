use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cg::{solve_spd, SolveOptions};
use crate::parallel::{axpy, dot};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    pub seed: u64,
    /// Relative residual ‖Kx − λMx‖ / ‖Kx‖ each returned pair must meet.
    pub tol: f64,
    /// Problems at most this large go straight to the dense solver.
    pub dense_limit: usize,
    pub max_restarts: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { seed: 42, tol: 1e-8, dense_limit: 0, max_restarts: 64 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// M-normalized: xᵀMx = 1.
    pub vector: Vec<f64>,
    pub residual: f64,
}

/// Dense fallback applies below this size when Lanczos breaks down.
const DENSE_FALLBACK_LIMIT: usize = 2000;

/// The `k` smallest eigenpairs of `Kx = λMx` lying above `shift`.
///
/// Uses shift-invert Lanczos in the M-inner product with full
/// reorthogonalization. Converged vectors are locked and the iteration is
/// restarted from a fresh random vector orthogonal to them until a restart
/// finds nothing below the current k-th value, which picks up repeated
/// eigenvalues.
pub fn eig_lowest(k_mat: &CsrMatrix, m_mat: &CsrMatrix, k: usize, shift: f64, opts: &EigenOptions) -> Result<Vec<EigenPair>> {
    let n = k_mat.dim();
    if m_mat.dim() != n {
        return Err(Error::Argument(format!("K is {n}×{n} but M is {0}×{0}", m_mat.dim())));
    }
    if k == 0 || k > n {
        return Err(Error::Argument(format!("requested {k} eigenpairs from a problem of dimension {n}")));
    }
    if n <= opts.dense_limit {
        return dense_lowest(k_mat, m_mat, k, shift, opts.tol);
    }
    match Lanczos::new(k_mat, m_mat, shift, opts)?.run(k) {
        Err(Error::Eigen(msg)) if n <= DENSE_FALLBACK_LIMIT => {
            log::warn!("Lanczos failed ({msg}); using dense solver");
            dense_lowest(k_mat, m_mat, k, shift, opts.tol)
        }
        other => other,
    }
}

fn residual_of(k_mat: &CsrMatrix, m_mat: &CsrMatrix, x: &[f64]) -> (f64, f64) {
    let kx = k_mat.matvec(x);
    let mx = m_mat.matvec(x);
    let lambda = dot(x, &kx) / dot(x, &mx);
    let r: f64 = kx.iter().zip(&mx).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
    let scale = dot(&kx, &kx).sqrt().max(lambda.abs() * dot(&mx, &mx).sqrt()).max(f64::MIN_POSITIVE);
    (lambda, r / scale)
}

fn finish(k_mat: &CsrMatrix, m_mat: &CsrMatrix, mut x: Vec<f64>) -> EigenPair {
    let mx = m_mat.matvec(&x);
    let s = dot(&x, &mx).sqrt();
    x.iter_mut().for_each(|v| *v /= s);
    // fix the sign so the largest-magnitude entry is positive
    if let Some(big) = x.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())) {
        if big < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let (value, residual) = residual_of(k_mat, m_mat, &x);
    EigenPair { value, vector: x, residual }
}

/// All eigenpairs of the dense generalized problem, ascending, with
/// M-orthonormal vectors in the columns.
pub fn dense_generalized(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let chol = m.clone().cholesky().ok_or_else(|| Error::Eigen("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or_else(|| Error::Eigen("singular mass factor".into()))?;
    let c = &linv * k * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let lt_inv = linv.transpose();
    let mut vectors = DMatrix::zeros(k.nrows(), order.len());
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &(&lt_inv * eig.eigenvectors.column(i)));
    }
    Ok((values, vectors))
}

fn dense_lowest(k_mat: &CsrMatrix, m_mat: &CsrMatrix, k: usize, shift: f64, tol: f64) -> Result<Vec<EigenPair>> {
    let (values, vectors) = dense_generalized(&k_mat.to_dense(), &m_mat.to_dense())?;
    let mut out = Vec::with_capacity(k);
    for (i, v) in values.iter().enumerate() {
        if *v <= shift {
            continue;
        }
        let pair = finish(k_mat, m_mat, vectors.column(i).iter().copied().collect());
        if !(pair.residual <= tol) {
            return Err(Error::Eigen(format!("dense eigenpair {i} has residual {:e}", pair.residual)));
        }
        out.push(pair);
        if out.len() == k {
            return Ok(out);
        }
    }
    Err(Error::Argument(format!("only {} eigenvalues lie above the shift {shift}", out.len())))
}

struct Lanczos<'a> {
    k_mat: &'a CsrMatrix,
    m_mat: &'a CsrMatrix,
    shifted: CsrMatrix,
    shift: f64,
    opts: &'a EigenOptions,
    rng: ChaCha8Rng,
    /// Locked eigenvectors and their M-images.
    locked: Vec<(f64, Vec<f64>, Vec<f64>)>,
}

/// Converged Ritz pairs of one Lanczos run, as (eigenvalue, vector).
type RitzSet = Vec<(f64, Vec<f64>)>;

impl<'a> Lanczos<'a> {
    fn new(k_mat: &'a CsrMatrix, m_mat: &'a CsrMatrix, shift: f64, opts: &'a EigenOptions) -> Result<Self> {
        let shifted = CsrMatrix::linear_combination(1.0, k_mat, -shift, m_mat);
        Ok(Self { k_mat, m_mat, shifted, shift, opts, rng: ChaCha8Rng::seed_from_u64(opts.seed), locked: Vec::new() })
    }

    fn apply_op(&self, mq: &[f64]) -> Result<Vec<f64>> {
        let opts = SolveOptions { tol: 1e-13, max_iter: 50 * self.shifted.dim() + 1000, ..SolveOptions::default() };
        match solve_spd(&self.shifted, mq, &opts) {
            Ok((x, _)) => Ok(x),
            Err(Error::NonConvergence { iterations, residual }) => Err(Error::Eigen(format!(
                "shifted solve stalled after {iterations} iterations (residual {residual:e}); is the shift below the spectrum?"
            ))),
            Err(e) => Err(Error::Eigen(format!("shifted operator is not positive definite: {e}"))),
        }
    }

    fn orthogonalize(&self, w: &mut [f64], basis: &[(Vec<f64>, Vec<f64>)]) {
        for _ in 0..2 {
            for (_, q, mq) in &self.locked {
                let c = dot(mq, w);
                axpy(-c, q, w);
            }
            for (q, mq) in basis {
                let c = dot(mq, w);
                axpy(-c, q, w);
            }
        }
    }

    fn random_start(&mut self, basis: &[(Vec<f64>, Vec<f64>)]) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.k_mat.dim();
        for _ in 0..4 {
            let mut q: Vec<f64> = (0..n).map(|_| self.rng.gen_range(-1.0..1.0)).collect();
            let before = dot(&q, &self.m_mat.matvec(&q)).sqrt();
            self.orthogonalize(&mut q, basis);
            let mq = self.m_mat.matvec(&q);
            let norm = dot(&q, &mq).sqrt();
            if norm > 1e-8 * before {
                return Some((q.iter().map(|v| v / norm).collect(), mq.iter().map(|v| v / norm).collect()));
            }
        }
        None
    }

    /// One Lanczos run on the operator deflated by the locked vectors.
    /// Returns Ritz pairs whose residual estimate is small, in ascending
    /// eigenvalue order, stopping once `want` of them have converged or the
    /// Krylov space is exhausted.
    fn sweep(&mut self, want: usize) -> Result<RitzSet> {
        let n = self.k_mat.dim();
        let room = n - self.locked.len();
        if room == 0 {
            return Ok(Vec::new());
        }
        let mut basis: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let Some(start) = self.random_start(&basis) else { return Ok(Vec::new()) };
        basis.push(start);
        loop {
            let j = basis.len() - 1;
            let mut w = self.apply_op(&basis[j].1)?;
            let a = dot(&basis[j].1, &w);
            axpy(-a, &basis[j].0, &mut w);
            if j > 0 {
                axpy(-beta[j - 1], &basis[j - 1].0, &mut w);
            }
            alpha.push(a);
            self.orthogonalize(&mut w, &basis);
            let mw = self.m_mat.matvec(&w);
            let b = dot(&w, &mw).max(0.0).sqrt();
            let exhausted = basis.len() == room;
            let theta_scale = alpha.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let breakdown = b <= 1e-12 * theta_scale;
            let check = exhausted || breakdown || basis.len().is_multiple_of(5) || basis.len() >= 2 * want + 10;
            if check {
                let (ritz, converged) = self.ritz(&alpha, &beta, b, &basis, want, exhausted || breakdown);
                if exhausted || converged {
                    return Ok(ritz);
                }
                if breakdown {
                    // invariant subspace: hand back what is exact, the caller restarts
                    return Ok(ritz);
                }
            }
            beta.push(b);
            basis.push((w.iter().map(|v| v / b).collect(), mw.iter().map(|v| v / b).collect()));
        }
    }

    fn ritz(
        &self,
        alpha: &[f64],
        beta: &[f64],
        b_next: f64,
        basis: &[(Vec<f64>, Vec<f64>)],
        want: usize,
        complete: bool,
    ) -> (RitzSet, bool) {
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..m).collect();
        // largest θ ↔ smallest λ = σ + 1/θ
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let scale = eig.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let mut out = Vec::new();
        let mut leading = 0;
        let mut still_leading = true;
        for &i in &order {
            let theta = eig.eigenvalues[i];
            if theta <= 0.0 {
                break;
            }
            let est = (b_next * eig.eigenvectors[(m - 1, i)]).abs();
            let ok = complete || est <= 1e-11 * scale.max(theta);
            if !ok {
                still_leading = false;
                continue;
            }
            if still_leading {
                leading += 1;
            }
            let s: DVector<f64> = eig.eigenvectors.column(i).into();
            let mut x = vec![0.0; self.k_mat.dim()];
            for (c, (q, _)) in s.iter().zip(basis) {
                axpy(*c, q, &mut x);
            }
            out.push((self.shift + 1.0 / theta, x));
        }
        (out, complete || leading >= want)
    }

    fn run(mut self, k: usize) -> Result<Vec<EigenPair>> {
        let mut restarts = 0;
        loop {
            let kth = if self.locked.len() >= k { self.locked[k - 1].0 } else { f64::INFINITY };
            let want = k.saturating_sub(self.locked.len()).max(1);
            let found = self.sweep(want)?;
            let mut added = 0;
            for (lambda, x) in found {
                let pair = finish(self.k_mat, self.m_mat, x);
                if pair.residual > self.opts.tol {
                    continue;
                }
                if lambda < kth * (1.0 - 1e-12) || self.locked.len() < k {
                    let mx = self.m_mat.matvec(&pair.vector);
                    self.locked.push((pair.value, pair.vector, mx));
                    added += 1;
                }
            }
            self.locked.sort_by(|a, b| a.0.total_cmp(&b.0));
            if added == 0 {
                if self.locked.len() >= k {
                    break;
                }
                if self.locked.len() == self.k_mat.dim() {
                    break;
                }
                return Err(Error::Eigen(format!(
                    "Lanczos found no converged eigenpairs ({} of {k} locked)",
                    self.locked.len()
                )));
            }
            restarts += 1;
            if restarts > self.opts.max_restarts {
                return Err(Error::Eigen(format!("no convergence after {restarts} Lanczos restarts")));
            }
        }
        if self.locked.len() < k {
            return Err(Error::Eigen(format!("only {} eigenpairs converged", self.locked.len())));
        }
        let out = self
            .locked
            .into_iter()
            .take(k)
            .map(|(_, x, _)| finish(self.k_mat, self.m_mat, x))
            .collect();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn diagonal_pencil() {
        let k = CsrMatrix::from_triplets(3, &[(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0)]);
        let m = CsrMatrix::identity(3);
        let pairs = eig_lowest(&k, &m, 2, -1.0, &EigenOptions::default()).unwrap();
        assert!((pairs[0].value - 1.0).abs() < 1e-12);
        assert!((pairs[1].value - 2.0).abs() < 1e-12);
        assert!((pairs[0].vector[0].abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn too_many_requested() {
        let k = CsrMatrix::identity(3);
        assert!(matches!(eig_lowest(&k, &k, 4, -1.0, &EigenOptions::default()), Err(Error::Argument(_))));
    }

    #[test]
    fn laplacian_matches_closed_form() {
        let n = 300;
        let k = laplacian_1d(n);
        let m = CsrMatrix::identity(n);
        let pairs = eig_lowest(&k, &m, 5, -0.5, &EigenOptions::default()).unwrap();
        for (j, p) in pairs.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (j + 1) as f64 / (n + 1) as f64).cos();
            assert!((p.value - exact).abs() < 1e-10 * exact.max(1e-3), "{j}: {} vs {exact}", p.value);
            assert!(p.residual <= 1e-8);
        }
    }

    #[test]
    fn repeated_eigenvalues_are_all_found() {
        // two uncoupled copies of the same chain: every eigenvalue is double
        let n = 60;
        let one = laplacian_1d(n);
        let mut t = Vec::new();
        for i in 0..n {
            let (cols, vals) = one.row(i);
            for (c, v) in cols.iter().zip(vals) {
                t.push((i, *c, *v));
                t.push((i + n, c + n, *v));
            }
        }
        let k = CsrMatrix::from_triplets(2 * n, &t);
        let m = CsrMatrix::identity(2 * n);
        let pairs = eig_lowest(&k, &m, 4, -0.5, &EigenOptions::default()).unwrap();
        let l1 = 2.0 - 2.0 * (std::f64::consts::PI / (n + 1) as f64).cos();
        let l2 = 2.0 - 2.0 * (2.0 * std::f64::consts::PI / (n + 1) as f64).cos();
        let got: Vec<f64> = pairs.iter().map(|p| p.value).collect();
        for (g, e) in got.iter().zip([l1, l1, l2, l2]) {
            assert!((g - e).abs() < 1e-10, "{got:?}");
        }
        assert!(dot(&pairs[0].vector, &pairs[1].vector).abs() < 1e-8);
    }

    #[test]
    fn dense_and_lanczos_agree() {
        let n = 40;
        let k = laplacian_1d(n);
        let mut mt = Vec::new();
        for i in 0..n {
            mt.push((i, i, 1.0 + 0.5 * ((i * 7) % 5) as f64));
        }
        let m = CsrMatrix::from_triplets(n, &mt);
        let sparse = eig_lowest(&k, &m, 4, -0.1, &EigenOptions::default()).unwrap();
        let dense = eig_lowest(&k, &m, 4, -0.1, &EigenOptions { dense_limit: 100, ..Default::default() }).unwrap();
        for (a, b) in sparse.iter().zip(&dense) {
            assert!((a.value - b.value).abs() < 1e-10 * b.value);
        }
    }
}
