//! Element marking strategies, selectable by name.

use crate::{Error, Result};

pub trait MarkingStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    /// Element ids to refine, ascending.
    fn mark(&self, indicators: &[f64]) -> Vec<usize>;
    /// Whether the loop should use uniform refinement instead of bisection.
    fn uniform(&self) -> bool {
        false
    }
}

type Constructor = fn(Option<f64>) -> Result<Box<dyn MarkingStrategy>>;

const REGISTRY: &[(&str, Constructor)] = &[
    ("threshold", |p| Ok(Box::new(Threshold::new(p.unwrap_or(Threshold::DEFAULT))?))),
    ("dorfler", |p| Ok(Box::new(Dorfler::new(p.unwrap_or(Dorfler::DEFAULT))?))),
    ("uniform", |_| Ok(Box::new(Uniform))),
];

pub const DEFAULT_STRATEGY: &str = "threshold";

pub fn available() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

/// Builds a strategy by name with an optional parameter (τ or θ).
pub fn build(name: &str, parameter: Option<f64>) -> Result<Box<dyn MarkingStrategy>> {
    let (_, ctor) = REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Config(format!("unknown marking strategy {name:?}; available: {:?}", available())))?;
    ctor(parameter)
}

/// Marks `{K : η_K ≥ τ · max η}`.
#[derive(Debug, Clone, Copy)]
pub struct Threshold {
    pub tau: f64,
}

impl Threshold {
    pub const DEFAULT: f64 = 0.5;

    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::Config(format!("threshold τ must lie in (0, 1], got {tau}")));
        }
        Ok(Self { tau })
    }
}

impl MarkingStrategy for Threshold {
    fn name(&self) -> &'static str {
        "threshold"
    }

    fn mark(&self, eta: &[f64]) -> Vec<usize> {
        let max = eta.iter().copied().fold(0.0, f64::max);
        if max <= 0.0 {
            return Vec::new();
        }
        let cut = self.tau * max;
        (0..eta.len()).filter(|&k| eta[k] >= cut).collect()
    }
}

/// Smallest set whose squared indicators reach θ · Σ η², largest first,
/// ties by ascending id.
#[derive(Debug, Clone, Copy)]
pub struct Dorfler {
    pub theta: f64,
}

impl Dorfler {
    pub const DEFAULT: f64 = 0.5;

    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::Config(format!("Dörfler θ must lie in (0, 1], got {theta}")));
        }
        Ok(Self { theta })
    }
}

impl MarkingStrategy for Dorfler {
    fn name(&self) -> &'static str {
        "dorfler"
    }

    fn mark(&self, eta: &[f64]) -> Vec<usize> {
        let mut order: Vec<usize> = (0..eta.len()).filter(|&k| eta[k] > 0.0).collect();
        order.sort_by(|&a, &b| eta[b].total_cmp(&eta[a]).then(a.cmp(&b)));
        // tail[i] = Σ η² over order[i..], summed smallest first
        let mut tail = vec![0.0; order.len() + 1];
        for i in (0..order.len()).rev() {
            tail[i] = tail[i + 1] + eta[order[i]] * eta[order[i]];
        }
        let allowed = (1.0 - self.theta) * tail[0];
        let count = (0..=order.len()).find(|&i| tail[i] <= allowed).unwrap_or(order.len());
        let mut out = order[..count].to_vec();
        out.sort_unstable();
        out
    }
}

/// Marks every element; the loop refines uniformly.
#[derive(Debug, Clone, Copy)]
pub struct Uniform;

impl MarkingStrategy for Uniform {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn mark(&self, eta: &[f64]) -> Vec<usize> {
        (0..eta.len()).collect()
    }

    fn uniform(&self) -> bool {
        true
    }
}
