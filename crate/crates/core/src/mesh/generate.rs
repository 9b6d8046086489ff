//! Parametric geometries meshed on structured (tensor-product or polar) grids.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{BoundaryEdge, Mesh, PhysicalName};
use crate::constants::EPSILON_SILICON;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryKind {
    /// Axis-aligned box `[0, width] × [0, height]`. Boundaries are tagged
    /// `boundary:left|right|bottom|top`, the region `dielectric:fill`.
    Rectangle { width_m: f64, height_m: f64 },
    /// Coaxial cross-section centered at the origin, tagged
    /// `conductor:inner` / `conductor:outer`.
    Annulus { inner_radius_m: f64, outer_radius_m: f64 },
    /// Coplanar-waveguide cross-section in a grounded box. The metal layer
    /// (thickness `metal_thickness_m`) is centered on the substrate/vacuum
    /// interface at `y = 0`; the substrate fills `y < 0` down to the box
    /// floor and vacuum fills `y > 0` up to the lid. Ground planes reach the
    /// side walls.
    CpwCrossSection {
        center_width_m: f64,
        gap_m: f64,
        ground_width_m: f64,
        metal_thickness_m: f64,
        substrate_height_m: f64,
        air_height_m: f64,
    },
    /// Two rectangular strips side by side inside a grounded box centered at
    /// the origin, tagged `conductor:strip1`, `conductor:strip2`,
    /// `conductor:ground`.
    ParallelStrips {
        strip_width_m: f64,
        strip_thickness_m: f64,
        separation_m: f64,
        box_width_m: f64,
        box_height_m: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    #[serde(flatten)]
    pub kind: GeometryKind,
    /// Relative permittivity per region short name (`fill`, `substrate`,
    /// `vacuum`). Missing entries take the defaults of the geometry kind.
    #[serde(default)]
    pub materials: BTreeMap<String, f64>,
    pub target_edge_length_m: f64,
    /// Geometric growth of cell size away from feature lines (tensor-grid
    /// kinds only). 1 keeps the grid uniform.
    #[serde(default = "default_growth")]
    pub growth: f64,
}

fn default_growth() -> f64 {
    1.0
}

impl GeometrySpec {
    pub fn new(kind: GeometryKind, target_edge_length_m: f64) -> Self {
        Self { kind, materials: BTreeMap::new(), target_edge_length_m, growth: 1.0 }
    }

    pub fn with_material(mut self, region: &str, eps_r: f64) -> Self {
        self.materials.insert(region.to_string(), eps_r);
        self
    }

    pub fn with_growth(mut self, growth: f64) -> Self {
        self.growth = growth;
        self
    }

    fn region_names(&self) -> &'static [&'static str] {
        match self.kind {
            GeometryKind::CpwCrossSection { .. } => &["substrate", "vacuum"],
            _ => &["fill"],
        }
    }

    fn default_permittivity(region: &str) -> f64 {
        match region {
            "substrate" => EPSILON_SILICON,
            _ => 1.0,
        }
    }

    /// Relative permittivity keyed by full region physical name
    /// (`dielectric:<region>`).
    pub fn permittivity_map(&self) -> BTreeMap<String, f64> {
        self.region_names()
            .iter()
            .map(|r| {
                let eps = self.materials.get(*r).copied().unwrap_or_else(|| Self::default_permittivity(r));
                (format!("dielectric:{r}"), eps)
            })
            .collect()
    }

    /// Region name (`dielectric:<region>`) containing the point, or `None`
    /// outside the meshed domain (inside a conductor or outside the box).
    pub fn region_at(&self, p: [f64; 2]) -> Option<String> {
        let [x, y] = p;
        let inside = match self.kind {
            GeometryKind::Rectangle { width_m, height_m } => {
                (0.0..=width_m).contains(&x) && (0.0..=height_m).contains(&y)
            }
            GeometryKind::Annulus { inner_radius_m, outer_radius_m } => {
                let r = x.hypot(y);
                r >= inner_radius_m * (1.0 - 1e-9) && r <= outer_radius_m
            }
            GeometryKind::CpwCrossSection { .. } => {
                let c = CpwLayout::from(&self.kind);
                c.cell_region(x, y).is_some()
            }
            GeometryKind::ParallelStrips { .. } => {
                let s = StripsLayout::from(&self.kind);
                s.contains(x, y)
            }
        };
        if !inside {
            return None;
        }
        match self.kind {
            GeometryKind::CpwCrossSection { .. } => {
                Some(if y < 0.0 { "dielectric:substrate" } else { "dielectric:vacuum" }.to_string())
            }
            _ => Some("dielectric:fill".to_string()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Geometry(format!("{name} must be positive, got {v}")))
            }
        };
        positive("target_edge_length_m", self.target_edge_length_m)?;
        if !(self.growth.is_finite() && self.growth >= 1.0) {
            return Err(Error::Geometry(format!("growth must be >= 1, got {}", self.growth)));
        }
        for (region, eps) in &self.materials {
            if !self.region_names().contains(&region.as_str()) {
                return Err(Error::Geometry(format!("unknown material region {region:?}")));
            }
            if !(eps.is_finite() && *eps >= 1.0) {
                return Err(Error::Geometry(format!("relative permittivity of {region:?} must be >= 1, got {eps}")));
            }
        }
        let feature = match self.kind {
            GeometryKind::Rectangle { width_m, height_m } => {
                positive("width_m", width_m)?;
                positive("height_m", height_m)?;
                width_m.min(height_m)
            }
            GeometryKind::Annulus { inner_radius_m, outer_radius_m } => {
                positive("inner_radius_m", inner_radius_m)?;
                positive("outer_radius_m", outer_radius_m)?;
                if inner_radius_m >= outer_radius_m {
                    return Err(Error::Geometry(format!(
                        "inner radius {inner_radius_m} must be smaller than outer radius {outer_radius_m}"
                    )));
                }
                outer_radius_m - inner_radius_m
            }
            GeometryKind::CpwCrossSection {
                center_width_m,
                gap_m,
                ground_width_m,
                metal_thickness_m,
                substrate_height_m,
                air_height_m,
            } => {
                positive("center_width_m", center_width_m)?;
                positive("gap_m", gap_m)?;
                positive("ground_width_m", ground_width_m)?;
                positive("metal_thickness_m", metal_thickness_m)?;
                positive("substrate_height_m", substrate_height_m)?;
                positive("air_height_m", air_height_m)?;
                if substrate_height_m <= metal_thickness_m / 2.0 || air_height_m <= metal_thickness_m / 2.0 {
                    return Err(Error::Geometry("box must extend beyond the metal layer".into()));
                }
                center_width_m.min(gap_m).min(metal_thickness_m)
            }
            GeometryKind::ParallelStrips {
                strip_width_m,
                strip_thickness_m,
                separation_m,
                box_width_m,
                box_height_m,
            } => {
                positive("strip_width_m", strip_width_m)?;
                positive("strip_thickness_m", strip_thickness_m)?;
                positive("separation_m", separation_m)?;
                positive("box_width_m", box_width_m)?;
                positive("box_height_m", box_height_m)?;
                let side = (box_width_m - separation_m - 2.0 * strip_width_m) / 2.0;
                let top = (box_height_m - strip_thickness_m) / 2.0;
                if side <= 0.0 || top <= 0.0 {
                    return Err(Error::Geometry("strips do not fit inside the box".into()));
                }
                strip_width_m.min(strip_thickness_m).min(separation_m).min(side).min(top)
            }
        };
        if self.target_edge_length_m > feature {
            return Err(Error::FeatureResolution { target: self.target_edge_length_m, feature });
        }
        Ok(())
    }
}

/// Meshes a parametric geometry.
pub fn generate(spec: &GeometrySpec) -> Result<Mesh> {
    spec.validate()?;
    let h = spec.target_edge_length_m;
    let g = spec.growth;
    let mesh = match spec.kind {
        GeometryKind::Rectangle { width_m, height_m } => {
            let nx = (width_m / h - 1e-9).ceil().max(1.0) as usize;
            let ny = (height_m / h - 1e-9).ceil().max(1.0) as usize;
            structured_rectangle(width_m, height_m, nx, ny)
        }
        GeometryKind::Annulus { inner_radius_m, outer_radius_m } => annulus(inner_radius_m, outer_radius_m, h),
        GeometryKind::CpwCrossSection { .. } => {
            let c = CpwLayout::from(&spec.kind);
            let xs = graded_axis(&c.x_breaks(), h, g);
            let ys = graded_axis(&c.y_breaks(), h, g);
            tensor_mesh(
                &xs,
                &ys,
                Diagonal::Mirrored,
                |x, y| c.cell_region(x, y),
                |x, y| c.boundary_name(x, y),
            )
        }
        GeometryKind::ParallelStrips { .. } => {
            let s = StripsLayout::from(&spec.kind);
            let xs = graded_axis(&s.x_breaks(), h, g);
            let ys = graded_axis(&s.y_breaks(), h, g);
            tensor_mesh(
                &xs,
                &ys,
                Diagonal::Mirrored,
                |x, y| s.contains(x, y).then_some("dielectric:fill"),
                |x, y| s.boundary_name(x, y),
            )
        }
    };
    mesh.validate()?;
    Ok(mesh)
}

/// `nx × ny` grid on `[0, w] × [0, h]`, every cell split along its
/// lower-left to upper-right diagonal.
pub fn structured_rectangle(width: f64, height: f64, nx: usize, ny: usize) -> Mesh {
    let xs: Vec<f64> = (0..=nx).map(|i| width * i as f64 / nx as f64).collect();
    let ys: Vec<f64> = (0..=ny).map(|j| height * j as f64 / ny as f64).collect();
    tensor_mesh(
        &xs,
        &ys,
        Diagonal::Uniform,
        |_, _| Some("dielectric:fill"),
        |x, y| {
            let tol = 1e-12 * width.max(height);
            if x.abs() <= tol {
                "boundary:left"
            } else if (x - width).abs() <= tol {
                "boundary:right"
            } else if y.abs() <= tol {
                "boundary:bottom"
            } else {
                "boundary:top"
            }
        },
    )
}

#[derive(Clone, Copy)]
enum Diagonal {
    Uniform,
    /// Diagonal direction flips across `x = 0` and `y = 0`, so the
    /// triangulation is mirror-symmetric about both axes.
    Mirrored,
}

struct NameTable {
    names: BTreeMap<u32, PhysicalName>,
    by_name: BTreeMap<String, u32>,
}

impl NameTable {
    fn new() -> Self {
        Self { names: BTreeMap::new(), by_name: BTreeMap::new() }
    }

    fn tag(&mut self, name: &str, dim: u8) -> u32 {
        if let Some(&t) = self.by_name.get(name) {
            return t;
        }
        let t = self.names.len() as u32 + 1;
        self.names.insert(t, PhysicalName { dim, name: name.to_string() });
        self.by_name.insert(name.to_string(), t);
        t
    }
}

fn tensor_mesh<'a>(
    xs: &[f64],
    ys: &[f64],
    diagonal: Diagonal,
    cell_region: impl Fn(f64, f64) -> Option<&'a str>,
    boundary_name: impl Fn(f64, f64) -> &'a str,
) -> Mesh {
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);
    let cells: Vec<Option<&str>> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .map(|(i, j)| cell_region(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])))
        .collect();
    let kept = |i: isize, j: isize| -> bool {
        i >= 0 && j >= 0 && (i as usize) < nx && (j as usize) < ny && cells[j as usize * nx + i as usize].is_some()
    };

    let mut names = NameTable::new();
    let mut node_id = vec![usize::MAX; (nx + 1) * (ny + 1)];
    let mut nodes = Vec::new();
    let mut id = |i: usize, j: usize, nodes: &mut Vec<[f64; 2]>| -> usize {
        let k = j * (nx + 1) + i;
        if node_id[k] == usize::MAX {
            node_id[k] = nodes.len();
            nodes.push([xs[i], ys[j]]);
        }
        node_id[k]
    };

    let mut elements = Vec::new();
    let mut regions = Vec::new();
    let mut boundary = Vec::new();
    let x_mid = 0.5 * (xs[0] + xs[nx]);
    let y_mid = 0.5 * (ys[0] + ys[ny]);
    for j in 0..ny {
        for i in 0..nx {
            let Some(region) = cells[j * nx + i] else { continue };
            let tag = names.tag(region, 2);
            let p00 = id(i, j, &mut nodes);
            let p10 = id(i + 1, j, &mut nodes);
            let p11 = id(i + 1, j + 1, &mut nodes);
            let p01 = id(i, j + 1, &mut nodes);
            let main_diagonal = match diagonal {
                Diagonal::Uniform => true,
                Diagonal::Mirrored => {
                    let xc = 0.5 * (xs[i] + xs[i + 1]) - x_mid;
                    let yc = 0.5 * (ys[j] + ys[j + 1]) - y_mid;
                    (xc >= 0.0) == (yc >= 0.0)
                }
            };
            // refinement edge (the diagonal) first, counterclockwise
            if main_diagonal {
                elements.push([p11, p00, p10]);
                elements.push([p00, p11, p01]);
            } else {
                elements.push([p10, p01, p00]);
                elements.push([p01, p10, p11]);
            }
            regions.push(tag);
            regions.push(tag);

            let (ii, jj) = (i as isize, j as isize);
            let sides = [
                (!kept(ii, jj - 1), [p00, p10]),
                (!kept(ii + 1, jj), [p10, p11]),
                (!kept(ii, jj + 1), [p11, p01]),
                (!kept(ii - 1, jj), [p01, p00]),
            ];
            for (exterior, edge) in sides {
                if exterior {
                    let (a, b) = (nodes[edge[0]], nodes[edge[1]]);
                    let name = boundary_name(0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]));
                    let tag = names.tag(name, 1);
                    boundary.push(BoundaryEdge { nodes: edge, tag });
                }
            }
        }
    }
    Mesh::from_parts_unchecked(nodes, elements, regions, boundary, names.names)
}

fn annulus(a: f64, b: f64, h: f64) -> Mesh {
    let nr = ((b - a) / h - 1e-9).ceil().max(1.0) as usize;
    let ns = ((2.0 * std::f64::consts::PI * b / h).ceil() as usize).max(8);
    let mut names = NameTable::new();
    let fill = names.tag("dielectric:fill", 2);
    let inner = names.tag("conductor:inner", 1);
    let outer = names.tag("conductor:outer", 1);
    let mut nodes = Vec::with_capacity((nr + 1) * ns);
    for i in 0..=nr {
        let r = a + (b - a) * i as f64 / nr as f64;
        for j in 0..ns {
            let t = 2.0 * std::f64::consts::PI * j as f64 / ns as f64;
            nodes.push([r * t.cos(), r * t.sin()]);
        }
    }
    let id = |i: usize, j: usize| i * ns + (j % ns);
    let mut elements = Vec::with_capacity(2 * nr * ns);
    for i in 0..nr {
        for j in 0..ns {
            let (p00, p10, p11, p01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            elements.push(longest_edge_first([p00, p10, p11], &nodes));
            elements.push(longest_edge_first([p00, p11, p01], &nodes));
        }
    }
    let mut boundary = Vec::with_capacity(2 * ns);
    for j in 0..ns {
        boundary.push(BoundaryEdge { nodes: [id(0, j + 1), id(0, j)], tag: inner });
    }
    for j in 0..ns {
        boundary.push(BoundaryEdge { nodes: [id(nr, j), id(nr, j + 1)], tag: outer });
    }
    let regions = vec![fill; elements.len()];
    Mesh::from_parts_unchecked(nodes, elements, regions, boundary, names.names)
}

/// Cyclic rotation placing the longest edge at `(v0, v1)`.
fn longest_edge_first(el: [usize; 3], nodes: &[[f64; 2]]) -> [usize; 3] {
    let len2 = |a: usize, b: usize| {
        let (p, q) = (nodes[a], nodes[b]);
        (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)
    };
    let mut best = 0;
    let mut best_len = len2(el[0], el[1]);
    for k in 1..3 {
        let l = len2(el[k], el[(k + 1) % 3]);
        if l > best_len * (1.0 + 1e-12) {
            best = k;
            best_len = l;
        }
    }
    [el[best], el[(best + 1) % 3], el[(best + 2) % 3]]
}

/// Subdivides each interval between consecutive breakpoints. Cell sizes
/// start at `h` next to every breakpoint and grow by `growth` toward the
/// interval middle.
fn graded_axis(breaks: &[f64], h: f64, growth: f64) -> Vec<f64> {
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = b - a;
        let sizes = graded_sizes(len, h, growth);
        let mut x = a;
        for (k, s) in sizes.iter().enumerate() {
            x += s;
            out.push(if k + 1 == sizes.len() { b } else { x });
        }
    }
    out
}

fn graded_sizes(len: f64, h: f64, growth: f64) -> Vec<f64> {
    if growth <= 1.0 {
        let n = (len / h - 1e-9).ceil().max(1.0) as usize;
        return vec![len / n as f64; n];
    }
    let mut n = 1usize;
    loop {
        let sizes: Vec<f64> = (0..n).map(|i| h * growth.powi(i.min(n - 1 - i) as i32)).collect();
        let total: f64 = sizes.iter().sum();
        if total >= len * (1.0 - 1e-9) {
            let s = len / total;
            return sizes.into_iter().map(|v| v * s).collect();
        }
        n += 1;
    }
}

struct CpwLayout {
    w: f64,
    s: f64,
    half_box: f64,
    t: f64,
    sub: f64,
    air: f64,
}

impl From<&GeometryKind> for CpwLayout {
    fn from(kind: &GeometryKind) -> Self {
        match *kind {
            GeometryKind::CpwCrossSection {
                center_width_m,
                gap_m,
                ground_width_m,
                metal_thickness_m,
                substrate_height_m,
                air_height_m,
            } => Self {
                w: center_width_m,
                s: gap_m,
                half_box: center_width_m / 2.0 + gap_m + ground_width_m,
                t: metal_thickness_m,
                sub: substrate_height_m,
                air: air_height_m,
            },
            _ => unreachable!("not a CPW cross-section"),
        }
    }
}

impl CpwLayout {
    fn x_breaks(&self) -> Vec<f64> {
        let (c, g) = (self.w / 2.0, self.w / 2.0 + self.s);
        vec![-self.half_box, -g, -c, c, g, self.half_box]
    }

    fn y_breaks(&self) -> Vec<f64> {
        vec![-self.sub, -self.t / 2.0, 0.0, self.t / 2.0, self.air]
    }

    fn in_metal(&self, x: f64, y: f64) -> bool {
        y.abs() < self.t / 2.0 && (x.abs() < self.w / 2.0 || x.abs() > self.w / 2.0 + self.s)
    }

    fn cell_region(&self, x: f64, y: f64) -> Option<&'static str> {
        if x.abs() > self.half_box || y < -self.sub || y > self.air || self.in_metal(x, y) {
            return None;
        }
        Some(if y < 0.0 { "dielectric:substrate" } else { "dielectric:vacuum" })
    }

    fn boundary_name(&self, x: f64, y: f64) -> &'static str {
        let tol = 1e-9 * self.half_box;
        let on_wall = (x.abs() - self.half_box).abs() <= tol
            || (y + self.sub).abs() <= tol
            || (y - self.air).abs() <= tol;
        if on_wall {
            "boundary:enclosure"
        } else if x.abs() < self.w / 2.0 + tol {
            "conductor:center"
        } else {
            "conductor:ground"
        }
    }
}

struct StripsLayout {
    sw: f64,
    st: f64,
    sep: f64,
    bw: f64,
    bh: f64,
}

impl From<&GeometryKind> for StripsLayout {
    fn from(kind: &GeometryKind) -> Self {
        match *kind {
            GeometryKind::ParallelStrips {
                strip_width_m,
                strip_thickness_m,
                separation_m,
                box_width_m,
                box_height_m,
            } => Self { sw: strip_width_m, st: strip_thickness_m, sep: separation_m, bw: box_width_m, bh: box_height_m },
            _ => unreachable!("not a parallel-strips geometry"),
        }
    }
}

impl StripsLayout {
    fn x_breaks(&self) -> Vec<f64> {
        let (i, o) = (self.sep / 2.0, self.sep / 2.0 + self.sw);
        vec![-self.bw / 2.0, -o, -i, i, o, self.bw / 2.0]
    }

    fn y_breaks(&self) -> Vec<f64> {
        vec![-self.bh / 2.0, -self.st / 2.0, self.st / 2.0, self.bh / 2.0]
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        let in_box = x.abs() <= self.bw / 2.0 && y.abs() <= self.bh / 2.0;
        let in_strip = y.abs() < self.st / 2.0 && x.abs() > self.sep / 2.0 && x.abs() < self.sep / 2.0 + self.sw;
        in_box && !in_strip
    }

    fn boundary_name(&self, x: f64, y: f64) -> &'static str {
        let tol = 1e-9 * self.bw;
        if (x.abs() - self.bw / 2.0).abs() <= tol || (y.abs() - self.bh / 2.0).abs() <= tol {
            "conductor:ground"
        } else if x < 0.0 {
            "conductor:strip1"
        } else {
            "conductor:strip2"
        }
    }
}
