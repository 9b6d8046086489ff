//! Symmetric quadrature rules on triangles in barycentric coordinates.
//! Weights sum to one and are scaled by the element area at use sites.

pub struct Rule {
    pub points: &'static [[f64; 3]],
    pub weights: &'static [f64],
}

/// Degree-2 rule (interior points).
pub const THREE_POINT: Rule = Rule {
    points: &[
        [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
        [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
        [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
    ],
    weights: &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
};

const A1: f64 = 0.059_715_871_789_770;
const B1: f64 = 0.470_142_064_105_115;
const A2: f64 = 0.797_426_985_353_087;
const B2: f64 = 0.101_286_507_323_456;
const W0: f64 = 0.225;
const W1: f64 = 0.132_394_152_788_506;
const W2: f64 = 0.125_939_180_544_827;

/// Degree-5 Dunavant rule.
pub const SEVEN_POINT: Rule = Rule {
    points: &[
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        [A1, B1, B1],
        [B1, A1, B1],
        [B1, B1, A1],
        [A2, B2, B2],
        [B2, A2, B2],
        [B2, B2, A2],
    ],
    weights: &[W0, W1, W1, W1, W2, W2, W2],
};

#[cfg(test)]
mod tests {
    use super::*;

    /// ∫ λ1^a λ2^b λ3^c dA / A = 2 a! b! c! / (a+b+c+2)!
    fn exact(a: u32, b: u32, c: u32) -> f64 {
        let f = |n: u32| (1..=n).map(f64::from).product::<f64>();
        2.0 * f(a) * f(b) * f(c) / f(a + b + c + 2)
    }

    fn integrate(rule: &Rule, a: i32, b: i32, c: i32) -> f64 {
        rule.points
            .iter()
            .zip(rule.weights)
            .map(|(p, w)| w * p[0].powi(a) * p[1].powi(b) * p[2].powi(c))
            .sum()
    }

    #[test]
    fn exactness_degrees() {
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                for c in 0..=(5 - a - b) {
                    let deg = a + b + c;
                    let e = exact(a, b, c);
                    if deg <= 2 {
                        assert!((integrate(&THREE_POINT, a as i32, b as i32, c as i32) - e).abs() < 1e-14);
                    }
                    assert!((integrate(&SEVEN_POINT, a as i32, b as i32, c as i32) - e).abs() < 1e-14, "{a} {b} {c}");
                }
            }
        }
    }
}
