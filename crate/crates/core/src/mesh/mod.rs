//! Unstructured conforming triangle meshes.
//!
//! Elements are stored counterclockwise. The first two vertices of every
//! element span its refinement edge and the third vertex is the newest
//! vertex, which is the labeling used by [`refine_marked`].

mod generate;
mod msh;
mod refine;

pub use generate::{generate, structured_rectangle, GeometryKind, GeometrySpec};
pub use msh::{load_msh, save_msh, LoadReport};
pub use refine::{refine_marked, refine_uniform};

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Triangles below this area are treated as corrupt input.
pub const MIN_ELEMENT_AREA: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhysicalName {
    /// 1 for boundary (line) groups, 2 for region (surface) groups.
    pub dim: u8,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    region_tags: Vec<u32>,
    boundary_edges: Vec<BoundaryEdge>,
    physical_names: BTreeMap<u32, PhysicalName>,
}

/// Unique edges of a mesh, numbered in order of first appearance while
/// walking elements and their local edges `(v0,v1)`, `(v1,v2)`, `(v2,v0)`.
#[derive(Debug, Clone)]
pub struct EdgeTable {
    pub edges: Vec<[usize; 2]>,
    pub element_edges: Vec<[usize; 3]>,
    pub multiplicity: Vec<u8>,
}

impl EdgeTable {
    pub fn build(elements: &[[usize; 3]]) -> Self {
        let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(elements.len() * 2);
        let mut edges = Vec::with_capacity(elements.len() * 3 / 2 + 8);
        let mut multiplicity = Vec::<u8>::with_capacity(elements.len() * 3 / 2 + 8);
        let mut element_edges = Vec::with_capacity(elements.len());
        for el in elements {
            let mut local = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (el[k], el[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let id = *index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    multiplicity.push(0);
                    edges.len() - 1
                });
                multiplicity[id] = multiplicity[id].saturating_add(1);
                local[k] = id;
            }
            element_edges.push(local);
        }
        Self { edges, element_edges, multiplicity }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

pub(crate) fn signed_area(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

impl Mesh {
    /// Builds a mesh and checks every structural invariant.
    pub fn new(
        nodes: Vec<[f64; 2]>,
        elements: Vec<[usize; 3]>,
        region_tags: Vec<u32>,
        boundary_edges: Vec<BoundaryEdge>,
        physical_names: BTreeMap<u32, PhysicalName>,
    ) -> Result<Self> {
        let mesh = Self { nodes, elements, region_tags, boundary_edges, physical_names };
        mesh.validate()?;
        Ok(mesh)
    }

    pub(crate) fn from_parts_unchecked(
        nodes: Vec<[f64; 2]>,
        elements: Vec<[usize; 3]>,
        region_tags: Vec<u32>,
        boundary_edges: Vec<BoundaryEdge>,
        physical_names: BTreeMap<u32, PhysicalName>,
    ) -> Self {
        Self { nodes, elements, region_tags, boundary_edges, physical_names }
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn region_tags(&self) -> &[u32] {
        &self.region_tags
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn physical_names(&self) -> &BTreeMap<u32, PhysicalName> {
        &self.physical_names
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn edge_table(&self) -> EdgeTable {
        EdgeTable::build(&self.elements)
    }

    pub fn vertices(&self, e: usize) -> [[f64; 2]; 3] {
        let el = self.elements[e];
        [self.nodes[el[0]], self.nodes[el[1]], self.nodes[el[2]]]
    }

    pub fn area(&self, e: usize) -> f64 {
        let [p, q, r] = self.vertices(e);
        signed_area(p, q, r)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_elements()).map(|e| self.area(e)).sum()
    }

    pub fn centroid(&self, e: usize) -> [f64; 2] {
        let [p, q, r] = self.vertices(e);
        [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0]
    }

    pub fn max_edge_length(&self) -> f64 {
        let mut worst = 0.0f64;
        for el in &self.elements {
            for k in 0..3 {
                let (a, b) = (self.nodes[el[k]], self.nodes[el[(k + 1) % 3]]);
                worst = worst.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        worst
    }

    /// Smallest interior angle (radians) of element `e`.
    pub fn min_angle(&self, e: usize) -> f64 {
        let v = self.vertices(e);
        (0..3)
            .map(|k| {
                let (p, q, r) = (v[k], v[(k + 1) % 3], v[(k + 2) % 3]);
                let (ux, uy) = (q[0] - p[0], q[1] - p[1]);
                let (wx, wy) = (r[0] - p[0], r[1] - p[1]);
                let cos = (ux * wx + uy * wy) / ((ux * ux + uy * uy).sqrt() * (wx * wx + wy * wy).sqrt());
                cos.clamp(-1.0, 1.0).acos()
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn tag_by_name(&self, name: &str) -> Option<u32> {
        self.physical_names.iter().find(|(_, p)| p.name == name).map(|(t, _)| *t)
    }

    pub fn name_of(&self, tag: u32) -> Option<&str> {
        self.physical_names.get(&tag).map(|p| p.name.as_str())
    }

    /// Resolves a physical name to its tag, failing with a configuration error.
    pub fn require_tag(&self, name: &str) -> Result<u32> {
        self.tag_by_name(name)
            .ok_or_else(|| Error::Config(format!("mesh has no physical group named {name:?}")))
    }

    /// Sorted, deduplicated nodes lying on boundary edges with the given tag.
    pub fn boundary_nodes(&self, tag: u32) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .boundary_edges
            .iter()
            .filter(|b| b.tag == tag)
            .flat_map(|b| b.nodes)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Copy of the mesh with every node shifted by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> Mesh {
        let mut m = self.clone();
        m.nodes.iter_mut().for_each(|p| {
            p[0] += dx;
            p[1] += dy;
        });
        m
    }

    /// Checks orientation, conformity and tag resolution.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if self.region_tags.len() != self.elements.len() {
            return Err(Error::InvalidMesh(format!(
                "{} region tags for {} elements",
                self.region_tags.len(),
                self.elements.len()
            )));
        }
        for (e, el) in self.elements.iter().enumerate() {
            if el.iter().any(|&v| v >= n) {
                return Err(Error::InvalidMesh(format!("element {e} references a missing node")));
            }
            let a = self.area(e);
            if a <= MIN_ELEMENT_AREA {
                return Err(Error::InvalidMesh(format!(
                    "element {e} has area {a:e}; elements must be counterclockwise with area > {MIN_ELEMENT_AREA:e}"
                )));
            }
        }
        for (e, t) in self.region_tags.iter().enumerate() {
            match self.physical_names.get(t) {
                Some(p) if p.dim == 2 => {}
                _ => return Err(Error::InvalidMesh(format!("element {e} region tag {t} has no surface physical name"))),
            }
        }

        let table = self.edge_table();
        let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(table.len());
        for (i, e) in table.edges.iter().enumerate() {
            index.insert((e[0], e[1]), i);
        }
        if let Some(i) = table.multiplicity.iter().position(|&m| m > 2) {
            let e = table.edges[i];
            return Err(Error::InvalidMesh(format!("edge ({}, {}) is shared by more than two elements", e[0], e[1])));
        }
        let mut tagged = vec![0u8; table.len()];
        for b in &self.boundary_edges {
            let key = edge_key(b.nodes[0], b.nodes[1]);
            let Some(&i) = index.get(&key) else {
                return Err(Error::InvalidMesh(format!("boundary edge ({}, {}) is not an element edge", key.0, key.1)));
            };
            if table.multiplicity[i] != 1 {
                return Err(Error::InvalidMesh(format!("boundary edge ({}, {}) lies between two elements", key.0, key.1)));
            }
            tagged[i] += 1;
            if tagged[i] > 1 {
                return Err(Error::InvalidMesh(format!("boundary edge ({}, {}) listed twice", key.0, key.1)));
            }
            match self.physical_names.get(&b.tag) {
                Some(p) if p.dim == 1 => {}
                _ => return Err(Error::InvalidMesh(format!("boundary tag {} has no line physical name", b.tag))),
            }
        }
        for (i, &m) in table.multiplicity.iter().enumerate() {
            if m == 1 && tagged[i] == 0 {
                let e = table.edges[i];
                return Err(Error::InvalidMesh(format!(
                    "edge ({}, {}) belongs to one element but is not a tagged boundary edge (hanging node or untagged boundary)",
                    e[0], e[1]
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hanging_node_is_rejected() {
        // Unit square: left triangle split at the diagonal midpoint, right one not.
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let elements = vec![[0, 1, 2], [4, 3, 0], [2, 3, 4]];
        let mut names = BTreeMap::new();
        names.insert(1, PhysicalName { dim: 2, name: "dielectric:fill".into() });
        names.insert(2, PhysicalName { dim: 1, name: "boundary:all".into() });
        let bnd = [[0, 1], [1, 2], [2, 3], [3, 0]]
            .iter()
            .map(|&nodes| BoundaryEdge { nodes, tag: 2 })
            .collect();
        let err = Mesh::new(nodes, elements, vec![1; 3], bnd, names).unwrap_err();
        assert!(matches!(err, Error::InvalidMesh(_)), "{err}");
    }

    #[test]
    fn clockwise_element_is_rejected() {
        let m = structured_rectangle(1.0, 1.0, 1, 1);
        let mut elements = m.elements().to_vec();
        elements[0].swap(1, 2);
        let err = Mesh::new(
            m.nodes().to_vec(),
            elements,
            m.region_tags().to_vec(),
            m.boundary_edges().to_vec(),
            m.physical_names().clone(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("counterclockwise"));
    }

    #[test]
    fn translation_keeps_shape() {
        let m = structured_rectangle(2.0, 1.0, 3, 2);
        let t = m.translated(10.0, -3.0);
        assert!((m.total_area() - t.total_area()).abs() < 1e-12);
        t.validate().unwrap();
    }
}
