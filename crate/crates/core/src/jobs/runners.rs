use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use super::{Artifact, Config, ConvergeQuantity, RunContext};
use crate::amr::{self, amr_loop, extrapolate, AmrOptions, AmrProblem};
use crate::analysis::{amdahl_fit, rmse, RmseMode, ScalingSample};
use crate::constants::EPSILON_0;
use crate::eigenmode::{cavity_modes, cpw_frequency, ResonatorSpec};
use crate::electrostatics::{capacitance_matrix, effective_permittivity_on, CapacitanceProblem};
use crate::epr;
use crate::fem::{assemble_stiffness, unit_coefficients, Order};
use crate::mesh::{generate, load_msh, save_msh, GeometryKind, GeometrySpec, Mesh};
use crate::parallel::with_workers;
use crate::solve::EigenOptions;
use crate::{Error, Result};

use super::Job;

fn pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn load_mesh(config: &Config, ctx: &RunContext) -> Result<Mesh> {
    match (&config.mesh_file, &config.geometry) {
        (Some(path), _) => {
            let full = ctx.base_dir.join(path);
            let text = std::fs::read_to_string(&full)
                .map_err(|e| Error::Config(format!("cannot read mesh file {}: {e}", full.display())))?;
            let (mesh, report) = load_msh(&text)?;
            if report.skipped_elements + report.reoriented + report.untagged_boundary_edges > 0 {
                log::warn!("mesh load: {report:?}");
            }
            Ok(mesh)
        }
        (None, Some(spec)) => generate(spec),
        (None, None) => Err(Error::Config("job needs either \"geometry\" or \"mesh_file\"".into())),
    }
}

fn capacitance_problem(config: &Config, mesh: &Mesh) -> Result<CapacitanceProblem> {
    let mut problem = match &config.geometry {
        Some(spec) => CapacitanceProblem::for_geometry(spec),
        None => CapacitanceProblem { conductors: vec![], ground: vec![], permittivity: unit_coefficients(mesh) },
    };
    if let Some(c) = &config.capacitance {
        if let Some(list) = &c.conductors {
            problem.conductors = list.clone();
        }
        if let Some(g) = &c.ground {
            problem.ground = g.clone();
        }
        if let Some(p) = &c.permittivity {
            problem.permittivity.extend(p.iter().map(|(k, v)| (k.clone(), *v)));
        }
    }
    if problem.conductors.is_empty() {
        return Err(Error::Config("no conductors: add \"capacitance.conductors\" for loaded meshes".into()));
    }
    Ok(problem)
}

fn eigen_options(ctx: &RunContext) -> EigenOptions {
    EigenOptions { seed: ctx.seed, ..EigenOptions::default() }
}

pub struct MeshJob;

impl Job for MeshJob {
    fn name(&self) -> &'static str {
        "mesh"
    }

    fn run(&self, config: &Config, ctx: &RunContext) -> Result<Vec<Artifact>> {
        let mesh = load_mesh(config, ctx)?;
        let min_angle = (0..mesh.num_elements()).map(|e| mesh.min_angle(e)).fold(f64::INFINITY, f64::min);
        let summary = json!({
            "nodes": mesh.num_nodes(),
            "elements": mesh.num_elements(),
            "boundary_edges": mesh.boundary_edges().len(),
            "edges": mesh.edge_table().len(),
            "dof_p1": mesh.num_nodes(),
            "dof_p2": mesh.num_nodes() + mesh.edge_table().len(),
            "area_m2": mesh.total_area(),
            "max_edge_length_m": mesh.max_edge_length(),
            "min_angle_deg": min_angle.to_degrees(),
            "physical_names": mesh.physical_names().values().map(|p| &p.name).collect::<Vec<_>>(),
        });
        Ok(vec![Artifact::new("mesh.msh", save_msh(&mesh)), Artifact::new("mesh.json", pretty(&summary)?)])
    }
}

pub struct CapJob;

impl Job for CapJob {
    fn name(&self) -> &'static str {
        "cap"
    }

    fn run(&self, config: &Config, ctx: &RunContext) -> Result<Vec<Artifact>> {
        let mesh = load_mesh(config, ctx)?;
        let problem = capacitance_problem(config, &mesh)?;
        let c = capacitance_matrix(&mesh, &problem, config.fem.order, config.fem.tol)?;
        let timing: Vec<_> = c
            .conductors
            .iter()
            .zip(&c.reports)
            .map(|(name, r)| {
                json!({"conductor": name, "iterations": r.iterations, "residual": r.residual,
                       "seconds": r.seconds, "workers": r.workers})
            })
            .collect();
        let mut out = vec![
            Artifact::new("capacitance.json", c.to_json()? + "\n"),
            Artifact::new("capacitance.csv", c.to_csv()),
            Artifact::new("timing.json", pretty(&timing)?),
        ];
        if config.capacitance.as_ref().is_some_and(|c| c.effective_permittivity) {
            let eff = effective_permittivity_on(&mesh, &problem, config.fem.order, config.fem.tol)?;
            out.push(Artifact::new("eps_eff.json", pretty(&eff)?));
        }
        Ok(out)
    }
}

pub struct ModesJob;

impl Job for ModesJob {
    fn name(&self) -> &'static str {
        "modes"
    }

    fn run(&self, config: &Config, ctx: &RunContext) -> Result<Vec<Artifact>> {
        if let Some(res) = &config.resonator {
            let (eps_eff, dof) = match res.eps_eff {
                Some(e) => (e, None),
                None => {
                    let spec = config
                        .geometry
                        .as_ref()
                        .filter(|g| matches!(g.kind, GeometryKind::CpwCrossSection { .. }))
                        .ok_or_else(|| Error::Config("resonator without \"eps_eff\" needs a CPW geometry".into()))?;
                    let mesh = generate(spec)?;
                    let problem = capacitance_problem(config, &mesh)?;
                    let eff = effective_permittivity_on(&mesh, &problem, config.fem.order, config.fem.tol)?;
                    (eff.eps_eff, Some(eff.dof))
                }
            };
            let spec = ResonatorSpec::new(res.length_mm * 1e-3, eps_eff, res.topology, res.harmonic)
                .map_err(|e| Error::Config(e.to_string()))?;
            let report = json!({
                "length_mm": res.length_mm,
                "topology": res.topology,
                "harmonic": res.harmonic,
                "eps_eff": eps_eff,
                "frequency_GHz": cpw_frequency(&spec) / 1e9,
                "dof": dof,
            });
            return Ok(vec![Artifact::new("resonator.json", pretty(&report)?)]);
        }
        let mesh = load_mesh(config, ctx)?;
        let eig = config.eigen.clone().unwrap_or_default();
        let set = cavity_modes(&mesh, &eig.dirichlet, eig.count, config.fem.order, &eigen_options(ctx))?;
        let mut out = vec![Artifact::new("modes.json", set.to_json()? + "\n")];
        for i in 0..set.modes.len() {
            out.push(Artifact::new(&format!("mode_{}.csv", i + 1), set.field_csv(&mesh, i)));
        }
        Ok(out)
    }
}

pub struct EprJobRunner;

impl Job for EprJobRunner {
    fn name(&self) -> &'static str {
        "epr"
    }

    fn run(&self, config: &Config, _: &RunContext) -> Result<Vec<Artifact>> {
        let job = config.epr.as_ref().ok_or_else(|| Error::Config("epr job needs an \"epr\" section".into()))?;
        let report = epr::run_job(job)?;
        Ok(vec![Artifact::new("epr.json", pretty(&report)?)])
    }
}

/// Closed-form value of the tracked quantity where one is known.
fn reference_value(geometry: Option<&GeometrySpec>, quantity: ConvergeQuantity, mode: usize) -> Option<f64> {
    let spec = geometry?;
    match (&spec.kind, quantity) {
        (GeometryKind::Annulus { inner_radius_m, outer_radius_m }, ConvergeQuantity::Capacitance) => {
            let eps = spec.permittivity_map().values().next().copied().unwrap_or(1.0);
            Some(2.0 * PI * EPSILON_0 * eps / (outer_radius_m / inner_radius_m).ln())
        }
        (GeometryKind::Rectangle { width_m, height_m }, ConvergeQuantity::Eigen) => {
            let mut values: Vec<f64> = (1..=8)
                .flat_map(|m| (1..=8).map(move |n| (m as f64, n as f64)))
                .map(|(m, n)| PI * PI * ((m / width_m).powi(2) + (n / height_m).powi(2)))
                .collect();
            values.sort_by(f64::total_cmp);
            values.get(mode).copied()
        }
        _ => None,
    }
}

pub struct ConvergeJob;

impl Job for ConvergeJob {
    fn name(&self) -> &'static str {
        "converge"
    }

    fn run(&self, config: &Config, ctx: &RunContext) -> Result<Vec<Artifact>> {
        let mesh = load_mesh(config, ctx)?;
        let a = &config.amr;
        let strategy = amr::marking::build(&a.strategy, a.parameter)?;
        if !(a.target > 0.0) {
            return Err(Error::Config(format!("amr.target must be positive, got {}", a.target)));
        }
        let problem = match a.quantity {
            ConvergeQuantity::Capacitance => AmrProblem::Capacitance(capacitance_problem(config, &mesh)?),
            ConvergeQuantity::Eigen => AmrProblem::Eigen {
                dirichlet: config.eigen.as_ref().map(|e| e.dirichlet.clone()).unwrap_or_default(),
                mode: a.mode,
            },
        };
        let opts = AmrOptions {
            order: config.fem.order,
            max_dof: a.max_dof,
            target_rel_change: a.target,
            tol: config.fem.tol,
            eigen: eigen_options(ctx),
        };
        let outcome = amr_loop(&mesh, &problem, &*strategy, &opts).map_err(|f| {
            for r in &f.trace.rows {
                log::error!("partial trace: iter {} dof {} value {:e}", r.iter, r.dof, r.value);
            }
            f.error
        })?;
        let last = outcome.trace.last().expect("loop records at least one row");
        let extrapolation = extrapolate(&outcome.trace).ok();
        let reference = reference_value(config.geometry.as_ref(), a.quantity, a.mode);
        let summary = json!({
            "quantity": a.quantity,
            "strategy": strategy.name(),
            "reason": outcome.reason.as_str(),
            "iterations": outcome.trace.len(),
            "final_dof": last.dof,
            "final_value": last.value,
            "extrapolation": extrapolation,
            "reference_value": reference,
            "relative_error": reference.map(|r| (last.value - r).abs() / r.abs()),
        });
        Ok(vec![
            Artifact::new("trace.csv", outcome.trace.to_csv()),
            Artifact::new("converge.json", pretty(&summary)?),
        ])
    }
}

pub struct RmseJob;

impl Job for RmseJob {
    fn name(&self) -> &'static str {
        "rmse"
    }

    fn run(&self, config: &Config, _: &RunContext) -> Result<Vec<Artifact>> {
        let cmp =
            config.comparison.as_ref().ok_or_else(|| Error::Config("rmse job needs a \"comparison\" section".into()))?;
        let mut csv = String::from("parameter,unit,mode,value\n");
        let mut results = Vec::new();
        for p in &cmp.parameters {
            let rows = p.rows();
            let mut entry = BTreeMap::new();
            for mode in &cmp.modes {
                let v = rmse(&rows, *mode).map_err(|e| Error::Config(format!("parameter {:?}: {e}", p.name)))?;
                let key = match mode {
                    RmseMode::Absolute => "absolute",
                    RmseMode::Percentage => "percentage",
                };
                csv.push_str(&format!("{},{},{},{}\n", p.name, p.unit, key, v));
                entry.insert(key, v);
            }
            results.push(json!({"parameter": p.name, "unit": p.unit, "rows": rows.len(), "rmse": entry}));
        }
        Ok(vec![Artifact::new("rmse.json", pretty(&results)?), Artifact::new("rmse.csv", csv)])
    }
}

/// Wall time of stiffness assembly on `mesh` at each worker count (best of
/// `repeats`).
pub fn measure_assembly(mesh: &Mesh, workers: &[usize], repeats: usize, order: Order) -> Result<Vec<ScalingSample>> {
    let coeff = unit_coefficients(mesh);
    let mut out = Vec::new();
    for &w in workers {
        if w == 0 {
            return Err(Error::Config("worker counts must be at least 1".into()));
        }
        let mut best = f64::INFINITY;
        for _ in 0..repeats.max(1) {
            let t = with_workers(w, || {
                let start = Instant::now();
                let sys = assemble_stiffness(mesh, &coeff, order);
                (start.elapsed().as_secs_f64(), sys.map(|s| s.stiffness.nnz()))
            });
            t.1?;
            best = best.min(t.0);
        }
        out.push(ScalingSample { workers: w, seconds: best.max(1e-9) });
    }
    Ok(out)
}

pub struct AmdahlJob;

impl Job for AmdahlJob {
    fn name(&self) -> &'static str {
        "amdahl"
    }

    fn run(&self, config: &Config, ctx: &RunContext) -> Result<Vec<Artifact>> {
        let scaling =
            config.scaling.as_ref().ok_or_else(|| Error::Config("amdahl job needs a \"scaling\" section".into()))?;
        let samples = if scaling.measure_workers.is_empty() {
            scaling.samples.clone()
        } else {
            let mesh = load_mesh(config, ctx)?;
            measure_assembly(&mesh, &scaling.measure_workers, scaling.repeats, config.fem.order)?
        };
        let fit = amdahl_fit(&samples)?;
        let report = json!({
            "T1_s": fit.t1_seconds,
            "parallel_fraction": fit.parallel_fraction,
            "residual": fit.residual,
            "samples": samples,
        });
        Ok(vec![Artifact::new("amdahl.json", pretty(&report)?)])
    }
}
