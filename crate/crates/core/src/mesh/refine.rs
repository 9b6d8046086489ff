//! Uniform (red) refinement and newest-vertex bisection with closure.

use std::collections::HashMap;

use super::{edge_key, BoundaryEdge, EdgeTable, Mesh};
use crate::{Error, Result};

/// Splits every triangle into four similar children through its edge
/// midpoints. Children keep the parent's refinement-edge orientation.
pub fn refine_uniform(mesh: &Mesh) -> Mesh {
    let table = EdgeTable::build(mesh.elements());
    let base = mesh.num_nodes();
    let mut nodes = mesh.nodes().to_vec();
    nodes.extend(table.edges.iter().map(|&[a, b]| midpoint(mesh.nodes()[a], mesh.nodes()[b])));
    let mid_of: HashMap<(usize, usize), usize> =
        table.edges.iter().enumerate().map(|(i, e)| ((e[0], e[1]), base + i)).collect();

    let mut elements = Vec::with_capacity(4 * mesh.num_elements());
    let mut regions = Vec::with_capacity(4 * mesh.num_elements());
    for ((el, edges), &tag) in mesh.elements().iter().zip(&table.element_edges).zip(mesh.region_tags()) {
        let [a, b, c] = *el;
        let (mab, mbc, mca) = (base + edges[0], base + edges[1], base + edges[2]);
        elements.extend_from_slice(&[[a, mab, mca], [mab, b, mbc], [mca, mbc, c], [mbc, mca, mab]]);
        regions.extend_from_slice(&[tag; 4]);
    }
    let mut boundary = Vec::with_capacity(2 * mesh.boundary_edges().len());
    for be in mesh.boundary_edges() {
        let [a, b] = be.nodes;
        let m = mid_of[&edge_key(a, b)];
        boundary.push(BoundaryEdge { nodes: [a, m], tag: be.tag });
        boundary.push(BoundaryEdge { nodes: [m, b], tag: be.tag });
    }
    Mesh::from_parts_unchecked(nodes, elements, regions, boundary, mesh.physical_names().clone())
}

fn midpoint(p: [f64; 2], q: [f64; 2]) -> [f64; 2] {
    [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
}

struct Bisector {
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    regions: Vec<u32>,
    alive: Vec<bool>,
    edge_elements: HashMap<(usize, usize), Vec<usize>>,
    midpoints: HashMap<(usize, usize), usize>,
    queue: Vec<usize>,
}

impl Bisector {
    fn new(mesh: &Mesh) -> Self {
        let mut edge_elements: HashMap<(usize, usize), Vec<usize>> = HashMap::with_capacity(mesh.num_elements() * 2);
        for (e, el) in mesh.elements().iter().enumerate() {
            for k in 0..3 {
                edge_elements.entry(edge_key(el[k], el[(k + 1) % 3])).or_default().push(e);
            }
        }
        Self {
            nodes: mesh.nodes().to_vec(),
            elements: mesh.elements().to_vec(),
            regions: mesh.region_tags().to_vec(),
            alive: vec![true; mesh.num_elements()],
            edge_elements,
            midpoints: HashMap::new(),
            queue: Vec::new(),
        }
    }

    fn attach(&mut self, e: usize) {
        let el = self.elements[e];
        let mut hanging = false;
        for k in 0..3 {
            let key = edge_key(el[k], el[(k + 1) % 3]);
            hanging |= self.midpoints.contains_key(&key);
            self.edge_elements.entry(key).or_default().push(e);
        }
        if hanging {
            self.queue.push(e);
        }
    }

    fn detach(&mut self, e: usize) {
        let el = self.elements[e];
        for k in 0..3 {
            let key = edge_key(el[k], el[(k + 1) % 3]);
            if let Some(list) = self.edge_elements.get_mut(&key) {
                list.retain(|&x| x != e);
            }
        }
    }

    fn bisect(&mut self, e: usize) {
        let [a, b, c] = self.elements[e];
        let key = edge_key(a, b);
        let m = match self.midpoints.get(&key) {
            Some(&m) => m,
            None => {
                let m = self.nodes.len();
                self.nodes.push(midpoint(self.nodes[a], self.nodes[b]));
                self.midpoints.insert(key, m);
                if let Some(list) = self.edge_elements.get(&key) {
                    self.queue.extend(list.iter().copied().filter(|&x| x != e));
                }
                m
            }
        };
        self.alive[e] = false;
        self.detach(e);
        let tag = self.regions[e];
        for child in [[c, a, m], [b, c, m]] {
            self.elements.push(child);
            self.regions.push(tag);
            self.alive.push(true);
            self.attach(self.elements.len() - 1);
        }
    }

    fn run(&mut self, marked: &[usize]) {
        for &e in marked.iter().rev() {
            self.queue.push(e);
        }
        while let Some(e) = self.queue.pop() {
            if self.alive[e] {
                self.bisect(e);
            }
        }
    }

    fn split_boundary(&self, a: usize, b: usize, tag: u32, out: &mut Vec<BoundaryEdge>) {
        match self.midpoints.get(&edge_key(a, b)) {
            Some(&m) => {
                self.split_boundary(a, m, tag, out);
                self.split_boundary(m, b, tag, out);
            }
            None => out.push(BoundaryEdge { nodes: [a, b], tag }),
        }
    }
}

/// Bisects every marked element across its refinement edge, then keeps
/// bisecting neighbors until no hanging nodes remain. Surviving elements
/// keep their relative order; children are appended.
pub fn refine_marked(mesh: &Mesh, marked: &[usize]) -> Result<Mesh> {
    if let Some(&bad) = marked.iter().find(|&&e| e >= mesh.num_elements()) {
        return Err(Error::Argument(format!(
            "element id {bad} out of range for mesh with {} elements",
            mesh.num_elements()
        )));
    }
    if marked.is_empty() {
        return Ok(mesh.clone());
    }
    let mut ids = marked.to_vec();
    ids.sort_unstable();
    ids.dedup();

    let mut bisector = Bisector::new(mesh);
    bisector.run(&ids);

    let mut boundary = Vec::with_capacity(mesh.boundary_edges().len() + 16);
    for be in mesh.boundary_edges() {
        bisector.split_boundary(be.nodes[0], be.nodes[1], be.tag, &mut boundary);
    }
    let (mut elements, mut regions) = (Vec::new(), Vec::new());
    for (e, alive) in bisector.alive.iter().enumerate() {
        if *alive {
            elements.push(bisector.elements[e]);
            regions.push(bisector.regions[e]);
        }
    }
    Ok(Mesh::from_parts_unchecked(bisector.nodes, elements, regions, boundary, mesh.physical_names().clone()))
}
