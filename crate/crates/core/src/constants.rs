//! CODATA 2018 values shared across the crate.

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054571817e-34;
/// Planck constant, J·s.
pub const PLANCK: f64 = 6.62607015e-34;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.99792458e8;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.8541878128e-12;
/// Relative permittivity of silicon at cryogenic temperature.
pub const EPSILON_SILICON: f64 = 11.45;

/// Reduced flux quantum ħ/(2e), Wb.
pub fn reduced_flux_quantum() -> f64 {
    HBAR / (2.0 * ELEMENTARY_CHARGE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flux_quantum_definition() {
        let phi0 = reduced_flux_quantum();
        assert_eq!(phi0, HBAR / (2.0 * ELEMENTARY_CHARGE));
        assert!((phi0 - 3.291_059_783e-16).abs() < 1e-24);
    }
}
