//! Capacitance matrices from electrostatic solves on tagged conductors.
//!
//! Each conductor is driven to 1 V with every other conductor and the
//! ground boundaries at 0 V; boundaries that belong to neither are natural
//! (zero normal flux). Entries come from the bilinear energy
//! `C_ij = ε0 ∫ ε_r ∇u_i · ∇u_j dA`, so the matrix is per unit length.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::EPSILON_0;
use crate::fem::{assemble_stiffness, DirichletReduction, DofMap, FieldSolution, Order};
use crate::mesh::{GeometryKind, GeometrySpec, Mesh};
use crate::solve::{solve_spd, SolveOptions, SolveReport};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conductor {
    pub name: String,
    /// Boundary physical names making up this conductor.
    pub boundaries: Vec<String>,
}

impl Conductor {
    pub fn new(name: &str, boundaries: &[&str]) -> Self {
        Self { name: name.to_string(), boundaries: boundaries.iter().map(|s| s.to_string()).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitanceProblem {
    pub conductors: Vec<Conductor>,
    /// Boundaries held at 0 V that do not get a row of their own.
    #[serde(default)]
    pub ground: Vec<String>,
    /// Region physical name → relative permittivity.
    pub permittivity: BTreeMap<String, f64>,
}

impl CapacitanceProblem {
    /// The conductor layout each generated geometry is built for.
    pub fn for_geometry(spec: &GeometrySpec) -> Self {
        let (conductors, ground) = match spec.kind {
            GeometryKind::Rectangle { .. } => {
                (vec![Conductor::new("left", &["boundary:left"]), Conductor::new("right", &["boundary:right"])], vec![])
            }
            GeometryKind::Annulus { .. } => (
                vec![Conductor::new("inner", &["conductor:inner"]), Conductor::new("outer", &["conductor:outer"])],
                vec![],
            ),
            GeometryKind::CpwCrossSection { .. } => (
                vec![
                    Conductor::new("center", &["conductor:center"]),
                    Conductor::new("ground", &["conductor:ground", "boundary:enclosure"]),
                ],
                vec![],
            ),
            GeometryKind::ParallelStrips { .. } => (
                vec![
                    Conductor::new("strip1", &["conductor:strip1"]),
                    Conductor::new("strip2", &["conductor:strip2"]),
                    Conductor::new("ground", &["conductor:ground"]),
                ],
                vec![],
            ),
        };
        Self { conductors, ground, permittivity: spec.permittivity_map() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapacitanceMatrix {
    pub conductors: Vec<String>,
    /// Maxwell capacitance matrix in F/m, row-major.
    pub maxwell: Vec<Vec<f64>>,
    pub dof: usize,
    #[serde(skip)]
    pub solutions: Vec<FieldSolution>,
    #[serde(skip)]
    pub reports: Vec<SolveReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutualEntry {
    pub a: String,
    pub b: String,
    pub farads_per_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutualView {
    /// One entry per unordered pair, `a` before `b` in conductor order.
    pub mutual: Vec<MutualEntry>,
    /// Row sums: capacitance from each conductor to ground.
    pub ground: BTreeMap<String, f64>,
}

impl MutualView {
    pub fn mutual(&self, a: &str, b: &str) -> Option<f64> {
        self.mutual.iter().find(|m| (m.a == a && m.b == b) || (m.a == b && m.b == a)).map(|m| m.farads_per_m)
    }
}

impl CapacitanceMatrix {
    pub fn len(&self) -> usize {
        self.conductors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conductors.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.conductors.iter().position(|c| c == name)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.maxwell[i][j]
    }

    fn max_abs(&self) -> f64 {
        self.maxwell.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Checks symmetry, diagonal dominance and off-diagonal sign, with
    /// tolerances relative to the largest entry.
    pub fn check_invariants(&self, rel_tol: f64) -> std::result::Result<(), String> {
        let tol = rel_tol * self.max_abs();
        let n = self.len();
        for i in 0..n {
            let cii = self.maxwell[i][i];
            if cii < -tol {
                return Err(format!("negative diagonal C[{i}][{i}] = {cii:e}"));
            }
            let mut off = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (cij, cji) = (self.maxwell[i][j], self.maxwell[j][i]);
                if (cij - cji).abs() > tol {
                    return Err(format!("asymmetric pair ({i},{j}): {cij:e} vs {cji:e}"));
                }
                if cij > tol {
                    return Err(format!("positive off-diagonal C[{i}][{j}] = {cij:e}"));
                }
                off += cij.abs();
            }
            if cii < off - tol {
                return Err(format!("row {i} is not diagonally dominant: {cii:e} < {off:e}"));
            }
        }
        Ok(())
    }

    pub fn mutual_view(&self) -> MutualView {
        let n = self.len();
        let mut mutual = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let c = 0.5 * (self.maxwell[i][j] + self.maxwell[j][i]);
                mutual.push(MutualEntry { a: self.conductors[i].clone(), b: self.conductors[j].clone(), farads_per_m: -c });
            }
        }
        let ground = (0..n).map(|i| (self.conductors[i].clone(), self.maxwell[i].iter().sum())).collect();
        MutualView { mutual, ground }
    }

    /// Field energy ½ ε0 ∫ ε_r |∇u_i|² of solve `i`, in J/m.
    pub fn energy(&self, i: usize) -> f64 {
        0.5 * self.maxwell[i][i]
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Out<'a> {
            conductors: &'a [String],
            #[serde(rename = "maxwell_F_per_m")]
            maxwell: &'a [Vec<f64>],
            dof: usize,
            mutual: MutualView,
        }
        Ok(serde_json::to_string_pretty(&Out {
            conductors: &self.conductors,
            maxwell: &self.maxwell,
            dof: self.dof,
            mutual: self.mutual_view(),
        })?)
    }

    /// Upper-triangle Maxwell entries in fF/m.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name_i,name_j,value_fF_per_m\n");
        for i in 0..self.len() {
            for j in i..self.len() {
                out.push_str(&format!("{},{},{}\n", self.conductors[i], self.conductors[j], self.maxwell[i][j] * 1e15));
            }
        }
        out
    }
}

fn boundary_dofs(mesh: &Mesh, dofs: &DofMap, names: &[String]) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for name in names {
        let tag = mesh
            .tag_by_name(name)
            .filter(|t| mesh.physical_names()[t].dim == 1)
            .ok_or_else(|| Error::Config(format!("unknown boundary group {name:?}")))?;
        out.extend(dofs.boundary_dofs(mesh, tag));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Solves one electrostatic problem per conductor (concurrently) and forms
/// the Maxwell capacitance matrix.
pub fn capacitance_matrix(mesh: &Mesh, problem: &CapacitanceProblem, order: Order, tol: f64) -> Result<CapacitanceMatrix> {
    let n = problem.conductors.len();
    if n < 2 {
        return Err(Error::Argument(format!("capacitance extraction needs at least two conductors, got {n}")));
    }
    let system = assemble_stiffness(mesh, &problem.permittivity, order)?;
    let k = &system.stiffness;

    let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
    let mut conductor_dofs = Vec::with_capacity(n);
    for (i, c) in problem.conductors.iter().enumerate() {
        let d = boundary_dofs(mesh, &system.dofs, &c.boundaries)?;
        if d.is_empty() {
            return Err(Error::Config(format!("conductor {:?} has no boundary nodes", c.name)));
        }
        for &dof in &d {
            if let Some(prev) = owner.insert(dof, i) {
                if prev != i {
                    return Err(Error::Config(format!(
                        "conductors {:?} and {:?} touch (shared DoF {dof})",
                        problem.conductors[prev].name, c.name
                    )));
                }
            }
        }
        conductor_dofs.push(d);
    }
    let ground = boundary_dofs(mesh, &system.dofs, &problem.ground)?;
    if let Some(d) = ground.iter().find(|d| owner.contains_key(d)) {
        return Err(Error::Config(format!("ground boundary touches conductor {:?}", problem.conductors[owner[d]].name)));
    }
    let constrained: Vec<usize> = owner.keys().copied().chain(ground.iter().copied()).collect();
    let reduction = DirichletReduction::new(k, constrained);
    let opts = SolveOptions::with_tol(tol);

    let solved: Vec<(Vec<f64>, SolveReport)> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<(Vec<f64>, SolveReport)> {
            let mut lifted = vec![0.0; system.n()];
            conductor_dofs[i].iter().for_each(|&d| lifted[d] = 1.0);
            let rhs = reduction.rhs(k, &lifted, None);
            let (free, report) = solve_spd(&reduction.matrix, &rhs, &opts)?;
            Ok((reduction.expand(&free, &lifted), report))
        })
        .collect::<Result<_>>()?;

    let ku: Vec<Vec<f64>> = solved.par_iter().map(|(u, _)| k.matvec(u)).collect();
    let maxwell = (0..n)
        .map(|i| (0..n).map(|j| EPSILON_0 * crate::parallel::dot(&solved[i].0, &ku[j])).collect())
        .collect();
    let (solutions, reports) = solved.into_iter().map(|(values, r)| (FieldSolution { values, order }, r)).unzip();
    Ok(CapacitanceMatrix {
        conductors: problem.conductors.iter().map(|c| c.name.clone()).collect(),
        maxwell,
        dof: system.n(),
        solutions,
        reports,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectivePermittivity {
    pub eps_eff: f64,
    pub c_dielectric_f_per_m: f64,
    pub c_vacuum_f_per_m: f64,
    pub dof: usize,
}

/// ε_eff of a CPW cross-section as the ratio of the center conductor's
/// self-capacitance with and without the dielectric.
pub fn effective_permittivity(spec: &GeometrySpec, order: Order, tol: f64) -> Result<EffectivePermittivity> {
    if !matches!(spec.kind, GeometryKind::CpwCrossSection { .. }) {
        return Err(Error::Argument("effective permittivity needs a CPW cross-section geometry".into()));
    }
    let mesh = crate::mesh::generate(spec)?;
    effective_permittivity_on(&mesh, &CapacitanceProblem::for_geometry(spec), order, tol)
}

/// Same as [`effective_permittivity`] on an existing mesh; the first
/// conductor is the signal line.
pub fn effective_permittivity_on(
    mesh: &Mesh,
    problem: &CapacitanceProblem,
    order: Order,
    tol: f64,
) -> Result<EffectivePermittivity> {
    let with = capacitance_matrix(mesh, problem, order, tol)?;
    let vacuum = CapacitanceProblem {
        permittivity: problem.permittivity.keys().map(|k| (k.clone(), 1.0)).collect(),
        ..problem.clone()
    };
    let without = capacitance_matrix(mesh, &vacuum, order, tol)?;
    Ok(EffectivePermittivity {
        eps_eff: with.get(0, 0) / without.get(0, 0),
        c_dielectric_f_per_m: with.get(0, 0),
        c_vacuum_f_per_m: without.get(0, 0),
        dof: with.dof,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::structured_rectangle;

    fn plate_problem(eps: f64) -> CapacitanceProblem {
        CapacitanceProblem {
            conductors: vec![Conductor::new("left", &["boundary:left"]), Conductor::new("right", &["boundary:right"])],
            ground: vec![],
            permittivity: [("dielectric:fill".to_string(), eps)].into(),
        }
    }

    #[test]
    fn parallel_plate_is_exact() {
        let m = structured_rectangle(1.0, 1.0, 6, 6);
        let c = capacitance_matrix(&m, &plate_problem(1.0), Order::P1, 1e-12).unwrap();
        let view = c.mutual_view();
        assert!((view.mutual("left", "right").unwrap() / EPSILON_0 - 1.0).abs() < 1e-9);
        assert!(view.ground["left"].abs() < 1e-9 * EPSILON_0);
        c.check_invariants(1e-6).unwrap();
    }

    #[test]
    fn permittivity_scales_linearly() {
        let m = structured_rectangle(2.0, 1.0, 5, 4);
        let a = capacitance_matrix(&m, &plate_problem(1.5), Order::P2, 1e-13).unwrap();
        let b = capacitance_matrix(&m, &plate_problem(3.0), Order::P2, 1e-13).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((b.get(i, j) - 2.0 * a.get(i, j)).abs() <= 1e-10 * b.get(i, j).abs());
            }
        }
    }

    #[test]
    fn single_conductor_rejected() {
        let m = structured_rectangle(1.0, 1.0, 2, 2);
        let mut p = plate_problem(1.0);
        p.conductors.truncate(1);
        assert!(matches!(capacitance_matrix(&m, &p, Order::P1, 1e-10), Err(Error::Argument(_))));
    }

    #[test]
    fn mutual_view_definition() {
        let c = CapacitanceMatrix {
            conductors: vec!["a".into(), "b".into()],
            maxwell: vec![vec![2e-12, -1e-12], vec![-1e-12, 2e-12]],
            dof: 0,
            solutions: vec![],
            reports: vec![],
        };
        let v = c.mutual_view();
        assert_eq!(v.mutual("a", "b"), Some(1e-12));
        assert_eq!(v.mutual("b", "a"), Some(1e-12));
        assert_eq!(v.ground["a"], 1e-12);
        assert_eq!(v.mutual.len(), 1);
    }

    #[test]
    fn csv_layout() {
        let c = CapacitanceMatrix {
            conductors: vec!["a".into(), "b".into()],
            maxwell: vec![vec![2e-15, -1e-15], vec![-1e-15, 2e-15]],
            dof: 0,
            solutions: vec![],
            reports: vec![],
        };
        assert_eq!(c.to_csv(), "name_i,name_j,value_fF_per_m\na,a,2\na,b,-1\nb,b,2\n");
    }
}
