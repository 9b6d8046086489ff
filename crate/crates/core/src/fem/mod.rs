//! Lagrange P1/P2 finite elements: DoF numbering, element-parallel local
//! matrices, row-parallel global assembly, and Dirichlet elimination.
//!
//! Coefficients are relative permittivities (dimensionless); ε0 is applied
//! only when capacitances are reported.

pub mod element;
pub mod quadrature;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mesh::{EdgeTable, Mesh};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};
use element::{local_dofs, LocalMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Order {
    P1,
    P2,
}

impl TryFrom<u8> for Order {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Order::P1),
            2 => Ok(Order::P2),
            _ => Err(format!("basis order must be 1 or 2, got {v}")),
        }
    }
}

impl From<Order> for u8 {
    fn from(o: Order) -> u8 {
        match o {
            Order::P1 => 1,
            Order::P2 => 2,
        }
    }
}

/// Global numbering: nodes first, then (P2 only) one DoF per edge in
/// [`EdgeTable`] order.
#[derive(Debug, Clone)]
pub struct DofMap {
    order: Order,
    num_nodes: usize,
    edges: Option<EdgeTable>,
    element_dofs: Vec<[usize; 6]>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, order: Order) -> Self {
        let num_nodes = mesh.num_nodes();
        match order {
            Order::P1 => Self {
                order,
                num_nodes,
                edges: None,
                element_dofs: mesh.elements().iter().map(|e| [e[0], e[1], e[2], 0, 0, 0]).collect(),
            },
            Order::P2 => {
                let table = mesh.edge_table();
                let element_dofs = mesh
                    .elements()
                    .iter()
                    .zip(&table.element_edges)
                    .map(|(e, k)| [e[0], e[1], e[2], num_nodes + k[0], num_nodes + k[1], num_nodes + k[2]])
                    .collect();
                Self { order, num_nodes, edges: Some(table), element_dofs }
            }
        }
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn len(&self) -> usize {
        self.num_nodes + self.edges.as_ref().map_or(0, |t| t.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn local_count(&self) -> usize {
        local_dofs(self.order)
    }

    /// Global DoFs of element `e` (first [`Self::local_count`] entries valid).
    pub fn element(&self, e: usize) -> &[usize] {
        &self.element_dofs[e][..self.local_count()]
    }

    pub fn num_elements(&self) -> usize {
        self.element_dofs.len()
    }

    /// Coordinates of every DoF (vertex or edge midpoint).
    pub fn coordinates(&self, mesh: &Mesh) -> Vec<[f64; 2]> {
        let mut out = mesh.nodes().to_vec();
        if let Some(t) = &self.edges {
            out.extend(t.edges.iter().map(|&[a, b]| {
                let (p, q) = (mesh.nodes()[a], mesh.nodes()[b]);
                [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
            }));
        }
        out
    }

    /// DoFs on boundary edges carrying `tag`, sorted.
    pub fn boundary_dofs(&self, mesh: &Mesh, tag: u32) -> Vec<usize> {
        let mut out = mesh.boundary_nodes(tag);
        if let Some(t) = &self.edges {
            let index: std::collections::HashMap<(usize, usize), usize> =
                t.edges.iter().enumerate().map(|(i, e)| ((e[0], e[1]), i)).collect();
            for b in mesh.boundary_edges().iter().filter(|b| b.tag == tag) {
                let key = (b.nodes[0].min(b.nodes[1]), b.nodes[0].max(b.nodes[1]));
                out.push(self.num_nodes + index[&key]);
            }
            out.sort_unstable();
            out.dedup();
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub dofs: DofMap,
    pub stiffness: CsrMatrix,
    pub mass: Option<CsrMatrix>,
    /// Dirichlet constraints, DoF → prescribed value.
    pub constrained: BTreeMap<usize, f64>,
}

impl SparseSystem {
    pub fn n(&self) -> usize {
        self.dofs.len()
    }

    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.n()).filter(|d| !self.constrained.contains_key(d)).collect()
    }

    pub fn reduction(&self) -> DirichletReduction {
        DirichletReduction::new(&self.stiffness, self.constrained.keys().copied().collect())
    }
}

#[derive(Debug, Clone)]
pub struct FieldSolution {
    pub values: Vec<f64>,
    pub order: Order,
}

impl FieldSolution {
    /// Gradient of the discrete field at barycentric point `l` of element `e`.
    pub fn gradient(&self, mesh: &Mesh, dofs: &DofMap, e: usize, l: [f64; 3]) -> [f64; 2] {
        let g = element::ElementGeometry::new(mesh.vertices(e));
        let grads = element::shape_gradients(self.order, &g, l);
        let mut out = [0.0; 2];
        for (i, d) in dofs.element(e).iter().enumerate() {
            out[0] += self.values[*d] * grads[i][0];
            out[1] += self.values[*d] * grads[i][1];
        }
        out
    }

    pub fn value(&self, dofs: &DofMap, e: usize, l: [f64; 3]) -> f64 {
        let phi = element::shape_values(self.order, l);
        dofs.element(e).iter().enumerate().map(|(i, d)| self.values[*d] * phi[i]).sum()
    }
}

/// Resolves a region-name → coefficient map to one coefficient per element.
pub fn element_coefficients(mesh: &Mesh, coefficients: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
    let mut by_tag = BTreeMap::new();
    for (&tag, p) in mesh.physical_names().iter().filter(|(_, p)| p.dim == 2) {
        if let Some(&c) = coefficients.get(&p.name) {
            by_tag.insert(tag, c);
        }
    }
    mesh.region_tags()
        .iter()
        .map(|t| {
            by_tag.get(t).copied().ok_or_else(|| {
                Error::Config(format!(
                    "no coefficient given for region {:?}",
                    mesh.name_of(*t).unwrap_or("<unnamed>")
                ))
            })
        })
        .collect()
}

/// Unit coefficient on every region of the mesh.
pub fn unit_coefficients(mesh: &Mesh) -> BTreeMap<String, f64> {
    mesh.physical_names().values().filter(|p| p.dim == 2).map(|p| (p.name.clone(), 1.0)).collect()
}

/// Sums local matrices into CSR. Rows are independent work items; within a
/// row, contributions are added in ascending element order, so the result
/// does not depend on the worker count.
fn assemble_rows(dofs: &DofMap, local: &[LocalMatrix]) -> CsrMatrix {
    let n = dofs.len();
    let mut counts = vec![0usize; n + 1];
    for e in 0..dofs.num_elements() {
        for &d in dofs.element(e) {
            counts[d + 1] += 1;
        }
    }
    for i in 0..n {
        counts[i + 1] += counts[i];
    }
    let mut cursor = counts.clone();
    let mut incidence = vec![(0u32, 0u8); counts[n]];
    for e in 0..dofs.num_elements() {
        for (l, &d) in dofs.element(e).iter().enumerate() {
            incidence[cursor[d]] = (e as u32, l as u8);
            cursor[d] += 1;
        }
    }

    let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let inc = &incidence[counts[i]..counts[i + 1]];
            let mut cols: Vec<usize> = inc.iter().flat_map(|&(e, _)| dofs.element(e as usize).iter().copied()).collect();
            cols.sort_unstable();
            cols.dedup();
            let mut vals = vec![0.0; cols.len()];
            for &(e, li) in inc {
                let k = &local[e as usize];
                for (lj, d) in dofs.element(e as usize).iter().enumerate() {
                    let pos = cols.binary_search(d).expect("column in pattern");
                    vals[pos] += k[li as usize * 6 + lj];
                }
            }
            (cols, vals)
        })
        .collect();

    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let nnz: usize = rows.iter().map(|r| r.0.len()).sum();
    let mut col_idx = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    for (c, v) in rows {
        col_idx.extend(c);
        values.extend(v);
        row_ptr.push(col_idx.len());
    }
    let mut m = CsrMatrix::from_pattern(n, row_ptr, col_idx);
    m.values_mut().copy_from_slice(&values);
    m
}

/// Stiffness matrix K_ij = Σ ∫ ε_r ∇φ_i · ∇φ_j dA.
pub fn assemble_stiffness(mesh: &Mesh, coefficients: &BTreeMap<String, f64>, order: Order) -> Result<SparseSystem> {
    let coeff = element_coefficients(mesh, coefficients)?;
    let dofs = DofMap::new(mesh, order);
    let local: Vec<LocalMatrix> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| element::local_stiffness(order, mesh.vertices(e), coeff[e]))
        .collect();
    let stiffness = assemble_rows(&dofs, &local);
    Ok(SparseSystem { dofs, stiffness, mass: None, constrained: BTreeMap::new() })
}

/// Mass matrix M_ij = Σ ∫ φ_i φ_j dA.
pub fn assemble_mass(mesh: &Mesh, order: Order) -> CsrMatrix {
    let dofs = DofMap::new(mesh, order);
    assemble_mass_with(mesh, &dofs)
}

fn assemble_mass_with(mesh: &Mesh, dofs: &DofMap) -> CsrMatrix {
    let local: Vec<LocalMatrix> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| element::local_mass(dofs.order(), mesh.vertices(e)))
        .collect();
    assemble_rows(dofs, &local)
}

impl SparseSystem {
    /// Attaches the mass matrix on the same DoF numbering.
    pub fn with_mass(mut self, mesh: &Mesh) -> Self {
        self.mass = Some(assemble_mass_with(mesh, &self.dofs));
        self
    }
}

/// Load vector b_i = ∫ f φ_i dA with the degree-5 rule.
pub fn assemble_load(mesh: &Mesh, dofs: &DofMap, f: impl Fn(f64, f64) -> f64 + Sync) -> Vec<f64> {
    let order = dofs.order();
    let local: Vec<[f64; 6]> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let v = mesh.vertices(e);
            let area = mesh.area(e);
            let mut b = [0.0; 6];
            for (p, w) in quadrature::SEVEN_POINT.points.iter().zip(quadrature::SEVEN_POINT.weights) {
                let x = p[0] * v[0][0] + p[1] * v[1][0] + p[2] * v[2][0];
                let y = p[0] * v[0][1] + p[1] * v[1][1] + p[2] * v[2][1];
                let fx = f(x, y);
                let phi = element::shape_values(order, *p);
                for i in 0..6 {
                    b[i] += w * area * fx * phi[i];
                }
            }
            b
        })
        .collect();
    let mut out = vec![0.0; dofs.len()];
    for (e, b) in local.iter().enumerate() {
        for (i, d) in dofs.element(e).iter().enumerate() {
            out[*d] += b[i];
        }
    }
    out
}

/// Records Dirichlet values for boundary groups given by physical name.
/// An empty map returns the system unchanged.
pub fn apply_dirichlet(system: SparseSystem, mesh: &Mesh, bc: &BTreeMap<String, f64>) -> Result<SparseSystem> {
    let mut system = system;
    for (name, &value) in bc {
        let tag = mesh
            .tag_by_name(name)
            .filter(|t| mesh.physical_names()[t].dim == 1)
            .ok_or_else(|| Error::Config(format!("unknown boundary group {name:?}")))?;
        for d in system.dofs.boundary_dofs(mesh, tag) {
            if let Some(prev) = system.constrained.insert(d, value) {
                if prev != value {
                    return Err(Error::Config(format!(
                        "DoF {d} receives conflicting Dirichlet values {prev} and {value} (boundary {name:?})"
                    )));
                }
            }
        }
    }
    Ok(system)
}

/// Symmetric elimination of constrained DoFs: the free block K_ff stays
/// symmetric and constrained values move to the right-hand side.
#[derive(Debug, Clone)]
pub struct DirichletReduction {
    pub free: Vec<usize>,
    pub constrained: Vec<usize>,
    pub matrix: CsrMatrix,
}

impl DirichletReduction {
    pub fn new(k: &CsrMatrix, mut constrained: Vec<usize>) -> Self {
        constrained.sort_unstable();
        constrained.dedup();
        let mut is_c = vec![false; k.dim()];
        constrained.iter().for_each(|&d| is_c[d] = true);
        let free: Vec<usize> = (0..k.dim()).filter(|&d| !is_c[d]).collect();
        let matrix = k.principal_submatrix(&free);
        Self { free, constrained, matrix }
    }

    /// Reduces a principal block of another matrix on the same DoFs.
    pub fn restrict(&self, other: &CsrMatrix) -> CsrMatrix {
        other.principal_submatrix(&self.free)
    }

    /// `b_f − K_fc u_c` for a full-length vector holding the constrained
    /// values (free entries ignored) and an optional full-length load.
    pub fn rhs(&self, k: &CsrMatrix, lifted: &[f64], load: Option<&[f64]>) -> Vec<f64> {
        let mut uc = vec![0.0; k.dim()];
        for &d in &self.constrained {
            uc[d] = lifted[d];
        }
        let kuc = k.matvec(&uc);
        self.free.iter().map(|&d| load.map_or(0.0, |b| b[d]) - kuc[d]).collect()
    }

    pub fn expand(&self, free_values: &[f64], lifted: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.free.len() + self.constrained.len()];
        for &d in &self.constrained {
            out[d] = lifted[d];
        }
        for (v, &d) in free_values.iter().zip(&self.free) {
            out[d] = *v;
        }
        out
    }
}
