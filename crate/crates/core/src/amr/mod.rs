//! Adaptive refinement: recovery-based error indicators, marking, the
//! solve–estimate–mark–refine loop and convergence traces.

mod estimate;
pub mod marking;
mod trace;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use estimate::{total as estimator_total, zz_estimate};
pub use marking::MarkingStrategy;
pub use trace::{
    extrapolate, extrapolate_points, notional_mesh_size, ConvergenceTrace, Extrapolation, TraceRow, EXTRAPOLATION_WINDOW,
};

use crate::eigenmode::cavity_modes;
use crate::electrostatics::{capacitance_matrix, CapacitanceProblem};
use crate::fem::{element_coefficients, unit_coefficients, DofMap, Order};
use crate::mesh::{refine_marked, refine_uniform, Mesh};
use crate::solve::EigenOptions;
use crate::{Error, Result};

/// The quantity an adaptive run tracks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AmrProblem {
    /// Self-capacitance of the first conductor (F/m); indicators are
    /// accumulated over every conductor solve.
    Capacitance(CapacitanceProblem),
    /// Dirichlet eigenvalue k² (1/m²) of mode `mode` (0-based).
    Eigen {
        #[serde(default)]
        dirichlet: Vec<String>,
        #[serde(default)]
        mode: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmrOptions {
    pub order: Order,
    pub max_dof: usize,
    pub target_rel_change: f64,
    pub tol: f64,
    pub eigen: EigenOptions,
}

impl Default for AmrOptions {
    fn default() -> Self {
        Self { order: Order::P1, max_dof: 100_000, target_rel_change: 1e-4, tol: 1e-10, eigen: EigenOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Completion {
    #[serde(rename = "dof budget")]
    DofBudget,
    #[serde(rename = "converged")]
    Converged,
    #[serde(rename = "nothing marked")]
    NothingMarked,
}

impl Completion {
    pub fn as_str(&self) -> &'static str {
        match self {
            Completion::DofBudget => "dof budget",
            Completion::Converged => "converged",
            Completion::NothingMarked => "nothing marked",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AmrOutcome {
    pub trace: ConvergenceTrace,
    pub reason: Completion,
    pub mesh: Mesh,
}

/// A failed iteration together with the rows completed before it.
#[derive(Debug)]
pub struct AmrFailure {
    pub error: Error,
    pub trace: ConvergenceTrace,
}

impl From<Box<AmrFailure>> for Error {
    fn from(f: Box<AmrFailure>) -> Self {
        f.error
    }
}

struct Step {
    dof: usize,
    value: f64,
    indicators: Vec<f64>,
}

fn solve_step(mesh: &Mesh, problem: &AmrProblem, opts: &AmrOptions) -> Result<Step> {
    match problem {
        AmrProblem::Capacitance(cap) => {
            let c = capacitance_matrix(mesh, cap, opts.order, opts.tol)?;
            let dofs = DofMap::new(mesh, opts.order);
            let coeff = element_coefficients(mesh, &cap.permittivity)?;
            let mut eta2 = vec![0.0; mesh.num_elements()];
            for u in &c.solutions {
                for (acc, e) in eta2.iter_mut().zip(zz_estimate(mesh, &dofs, u, &coeff)) {
                    *acc += e * e;
                }
            }
            Ok(Step { dof: c.dof, value: c.get(0, 0), indicators: eta2.into_iter().map(f64::sqrt).collect() })
        }
        AmrProblem::Eigen { dirichlet, mode } => {
            let set = cavity_modes(mesh, dirichlet, mode + 1, opts.order, &opts.eigen)?;
            let dofs = DofMap::new(mesh, opts.order);
            let coeff = element_coefficients(mesh, &unit_coefficients(mesh))?;
            let m = &set.modes[*mode];
            let u = crate::fem::FieldSolution { values: m.field.clone(), order: opts.order };
            Ok(Step { dof: set.dof, value: m.k_squared_per_m2, indicators: zz_estimate(mesh, &dofs, &u, &coeff) })
        }
    }
}

/// Runs solve → estimate → mark → refine from `seed` until the DoF count
/// exceeds `max_dof` or the relative change of the tracked value stays
/// below `target_rel_change` for two consecutive iterations.
pub fn amr_loop(
    seed: &Mesh,
    problem: &AmrProblem,
    strategy: &dyn MarkingStrategy,
    opts: &AmrOptions,
) -> std::result::Result<AmrOutcome, Box<AmrFailure>> {
    let mut trace = ConvergenceTrace::new(2);
    let mut mesh = seed.clone();
    let mut quiet = 0;
    loop {
        let start = Instant::now();
        let step = match solve_step(&mesh, problem, opts) {
            Ok(s) => s,
            Err(error) => return Err(Box::new(AmrFailure { error, trace })),
        };
        let seconds = start.elapsed().as_secs_f64();
        let prev = trace.last().map(|r| r.value);
        if let Err(error) = trace.push(step.dof, step.value, estimator_total(&step.indicators), seconds) {
            return Err(Box::new(AmrFailure { error, trace }));
        }
        log::info!("amr iter {} dof {} value {:e}", trace.len() - 1, step.dof, step.value);
        if let Some(p) = prev {
            let change = (step.value - p).abs() / step.value.abs().max(f64::MIN_POSITIVE);
            quiet = if change < opts.target_rel_change { quiet + 1 } else { 0 };
        }
        if step.dof > opts.max_dof || trace.len() == 1 && step.dof >= opts.max_dof {
            return Ok(AmrOutcome { trace, reason: Completion::DofBudget, mesh });
        }
        if quiet >= 2 {
            return Ok(AmrOutcome { trace, reason: Completion::Converged, mesh });
        }
        let marked = strategy.mark(&step.indicators);
        if marked.is_empty() {
            return Ok(AmrOutcome { trace, reason: Completion::NothingMarked, mesh });
        }
        mesh = if strategy.uniform() {
            refine_uniform(&mesh)
        } else {
            match refine_marked(&mesh, &marked) {
                Ok(m) => m,
                Err(error) => return Err(Box::new(AmrFailure { error, trace })),
            }
        };
    }
}
