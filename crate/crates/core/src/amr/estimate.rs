use rayon::prelude::*;

use crate::fem::element::{shape_gradients, shape_values, ElementGeometry};
use crate::fem::quadrature::{SEVEN_POINT, THREE_POINT};
use crate::fem::{DofMap, FieldSolution, Order};
use crate::mesh::Mesh;

const LOCAL_POINTS: [[f64; 3]; 6] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.5, 0.5, 0.0],
    [0.0, 0.5, 0.5],
    [0.5, 0.0, 0.5],
];

fn gradient_at(u: &FieldSolution, dofs: &DofMap, e: usize, g: &ElementGeometry, l: [f64; 3]) -> [f64; 2] {
    let grads = shape_gradients(u.order, g, l);
    let mut out = [0.0; 2];
    for (i, d) in dofs.element(e).iter().enumerate() {
        out[0] += u.values[*d] * grads[i][0];
        out[1] += u.values[*d] * grads[i][1];
    }
    out
}

/// Zienkiewicz–Zhu indicators η_K = ‖√ε_r (G(u_h) − ∇u_h)‖_{L²(K)}.
///
/// The recovered gradient G lives in the same Lagrange space as `u` and is
/// obtained at each DoF by area-weighted averaging of the element gradients
/// there. `coefficients` holds ε_r per element.
pub fn zz_estimate(mesh: &Mesh, dofs: &DofMap, u: &FieldSolution, coefficients: &[f64]) -> Vec<f64> {
    let nloc = dofs.local_count();
    let geoms: Vec<ElementGeometry> = (0..mesh.num_elements()).into_par_iter().map(|e| ElementGeometry::new(mesh.vertices(e))).collect();
    let local: Vec<[[f64; 2]; 6]> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let mut g = [[0.0; 2]; 6];
            for (i, gi) in g.iter_mut().enumerate().take(nloc) {
                *gi = gradient_at(u, dofs, e, &geoms[e], LOCAL_POINTS[i]);
            }
            g
        })
        .collect();

    let mut sum = vec![[0.0f64; 2]; dofs.len()];
    let mut weight = vec![0.0f64; dofs.len()];
    for (e, g) in local.iter().enumerate() {
        let a = geoms[e].area;
        for (i, d) in dofs.element(e).iter().enumerate() {
            sum[*d][0] += a * g[i][0];
            sum[*d][1] += a * g[i][1];
            weight[*d] += a;
        }
    }
    let recovered: Vec<[f64; 2]> = sum.iter().zip(&weight).map(|(s, w)| [s[0] / w, s[1] / w]).collect();

    let rule = match u.order {
        Order::P1 => &THREE_POINT,
        Order::P2 => &SEVEN_POINT,
    };
    (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let ids = dofs.element(e);
            let mut acc = 0.0;
            for (p, w) in rule.points.iter().zip(rule.weights) {
                let phi = shape_values(u.order, *p);
                let mut gr = [0.0; 2];
                for (i, d) in ids.iter().enumerate() {
                    gr[0] += recovered[*d][0] * phi[i];
                    gr[1] += recovered[*d][1] * phi[i];
                }
                let gh = gradient_at(u, dofs, e, &geoms[e], *p);
                acc += w * ((gr[0] - gh[0]).powi(2) + (gr[1] - gh[1]).powi(2));
            }
            (coefficients[e] * geoms[e].area * acc).max(0.0).sqrt()
        })
        .collect()
}

/// √(Σ η_K²)
pub fn total(indicators: &[f64]) -> f64 {
    indicators.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{refine_uniform, structured_rectangle};

    fn interpolate(mesh: &Mesh, order: Order, f: impl Fn(f64, f64) -> f64) -> (DofMap, FieldSolution) {
        let dofs = DofMap::new(mesh, order);
        let values = dofs.coordinates(mesh).iter().map(|p| f(p[0], p[1])).collect();
        (dofs, FieldSolution { values, order })
    }

    #[test]
    fn exact_on_linear_fields() {
        let m = structured_rectangle(2.0, 1.0, 5, 3);
        for order in [Order::P1, Order::P2] {
            let (dofs, u) = interpolate(&m, order, |x, y| 1.0 + 2.0 * x - 3.0 * y);
            let eta = zz_estimate(&m, &dofs, &u, &vec![1.0; m.num_elements()]);
            assert!(eta.iter().all(|v| *v <= 1e-12), "{order:?}");
        }
    }

    #[test]
    fn decreases_under_refinement() {
        let m = structured_rectangle(1.0, 1.0, 4, 4);
        let r = refine_uniform(&m);
        let f = |x: f64, y: f64| x * x + y * y;
        let (d0, u0) = interpolate(&m, Order::P1, f);
        let (d1, u1) = interpolate(&r, Order::P1, f);
        let e0 = total(&zz_estimate(&m, &d0, &u0, &vec![1.0; m.num_elements()]));
        let e1 = total(&zz_estimate(&r, &d1, &u1, &vec![1.0; r.num_elements()]));
        assert!(e0 / e1 >= 1.5, "{e0} {e1}");
    }

    #[test]
    fn translation_invariant() {
        let m = structured_rectangle(1.0, 1.0, 3, 3);
        let t = m.translated(10.0, -4.0);
        let (d0, u0) = interpolate(&m, Order::P2, |x, y| (3.0 * x).sin() * y);
        let u1 = FieldSolution { values: u0.values.clone(), order: Order::P2 };
        let d1 = DofMap::new(&t, Order::P2);
        let a = zz_estimate(&m, &d0, &u0, &vec![1.0; m.num_elements()]);
        let b = zz_estimate(&t, &d1, &u1, &vec![1.0; t.num_elements()]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-9 * x.max(1e-12));
        }
    }
}
