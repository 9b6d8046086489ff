//! Lagrange P1/P2 shape functions on a straight-sided triangle.
//!
//! Local P2 numbering: vertices 0..3, then the midpoints of local edges
//! `(0,1)`, `(1,2)`, `(2,0)`.

use super::quadrature::{Rule, SEVEN_POINT, THREE_POINT};
use super::Order;

#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub area: f64,
    /// Gradients of the barycentric coordinates (constant per element).
    pub grad_bary: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(v: [[f64; 2]; 3]) -> Self {
        let area = super::super::mesh::signed_area(v[0], v[1], v[2]);
        let mut grad_bary = [[0.0; 2]; 3];
        for (i, g) in grad_bary.iter_mut().enumerate() {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            *g = [(v[j][1] - v[k][1]) / (2.0 * area), (v[k][0] - v[j][0]) / (2.0 * area)];
        }
        Self { area, grad_bary }
    }
}

pub fn local_dofs(order: Order) -> usize {
    match order {
        Order::P1 => 3,
        Order::P2 => 6,
    }
}

pub fn shape_values(order: Order, l: [f64; 3]) -> [f64; 6] {
    match order {
        Order::P1 => [l[0], l[1], l[2], 0.0, 0.0, 0.0],
        Order::P2 => [
            l[0] * (2.0 * l[0] - 1.0),
            l[1] * (2.0 * l[1] - 1.0),
            l[2] * (2.0 * l[2] - 1.0),
            4.0 * l[0] * l[1],
            4.0 * l[1] * l[2],
            4.0 * l[2] * l[0],
        ],
    }
}

pub fn shape_gradients(order: Order, g: &ElementGeometry, l: [f64; 3]) -> [[f64; 2]; 6] {
    let d = &g.grad_bary;
    let mut out = [[0.0; 2]; 6];
    match order {
        Order::P1 => {
            out[..3].copy_from_slice(d);
        }
        Order::P2 => {
            for i in 0..3 {
                let s = 4.0 * l[i] - 1.0;
                out[i] = [s * d[i][0], s * d[i][1]];
            }
            for k in 0..3 {
                let (a, b) = (k, (k + 1) % 3);
                out[3 + k] = [
                    4.0 * (l[a] * d[b][0] + l[b] * d[a][0]),
                    4.0 * (l[a] * d[b][1] + l[b] * d[a][1]),
                ];
            }
        }
    }
    out
}

fn stiffness_rule(order: Order) -> &'static Rule {
    match order {
        Order::P1 => &THREE_POINT,
        Order::P2 => &SEVEN_POINT,
    }
}

/// Row-major local matrix with stride 6.
pub type LocalMatrix = [f64; 36];

/// ∫ coefficient ∇φ_i · ∇φ_j over the element.
pub fn local_stiffness(order: Order, v: [[f64; 2]; 3], coefficient: f64) -> LocalMatrix {
    let g = ElementGeometry::new(v);
    let n = local_dofs(order);
    let rule = stiffness_rule(order);
    let mut k = [0.0; 36];
    for (p, w) in rule.points.iter().zip(rule.weights) {
        let grads = shape_gradients(order, &g, *p);
        let scale = w * g.area * coefficient;
        for i in 0..n {
            for j in 0..n {
                k[i * 6 + j] += scale * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
            }
        }
    }
    k
}

/// ∫ φ_i φ_j over the element.
pub fn local_mass(order: Order, v: [[f64; 2]; 3]) -> LocalMatrix {
    let g = ElementGeometry::new(v);
    let n = local_dofs(order);
    let rule = stiffness_rule(order);
    let mut m = [0.0; 36];
    for (p, w) in rule.points.iter().zip(rule.weights) {
        let phi = shape_values(order, *p);
        for i in 0..n {
            for j in 0..n {
                m[i * 6 + j] += w * g.area * phi[i] * phi[j];
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    const REF: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    #[test]
    fn reference_p1_stiffness() {
        // ∇λ = (-1,-1), (1,0), (0,1); area 1/2 ⇒ K_ij = ½ ∇λ_i·∇λ_j
        let k = local_stiffness(Order::P1, REF, 1.0);
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i * 6 + j] - expect[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn reference_p1_mass() {
        let m = local_mass(Order::P1, REF);
        let a = 0.5;
        for i in 0..3 {
            for j in 0..3 {
                let e = a / 12.0 * if i == j { 2.0 } else { 1.0 };
                assert!((m[i * 6 + j] - e).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn p2_partition_of_unity_and_nodality() {
        let pts = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];
        for (i, p) in pts.iter().enumerate() {
            let v = shape_values(Order::P2, *p);
            for (j, vj) in v.iter().enumerate() {
                assert!((vj - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
        let g = ElementGeometry::new([[0.3, 0.1], [1.4, 0.2], [0.5, 1.7]]);
        let grads = shape_gradients(Order::P2, &g, [0.2, 0.3, 0.5]);
        let sx: f64 = grads.iter().map(|d| d[0]).sum();
        let sy: f64 = grads.iter().map(|d| d[1]).sum();
        assert!(sx.abs() < 1e-13 && sy.abs() < 1e-13);
    }

    #[test]
    fn p2_stiffness_rows_sum_to_zero() {
        let k = local_stiffness(Order::P2, [[0.3, 0.1], [1.4, 0.2], [0.5, 1.7]], 2.5);
        for i in 0..6 {
            let s: f64 = (0..6).map(|j| k[i * 6 + j]).sum();
            assert!(s.abs() < 1e-12);
        }
    }
}
