//! Physical constants (CODATA 2018) and conversions into reduced units.
//!
//! Reduced units measure lengths in Bohr radii and set `ħ²/2m = 1`, so an
//! energy `E` becomes the squared wave-vector `κ² = 2mE/ħ²` in `a₀⁻²` and a
//! potential strength `Cₙ` becomes `2mCₙ/ħ²` in `a₀ⁿ⁻²`.

use crate::error::{Error, Result};

pub const HBAR: f64 = 1.054_571_817e-34;
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
pub const HARTREE: f64 = 4.359_744_722_207_1e-18;
pub const ELECTRON_VOLT: f64 = 1.602_176_634e-19;
pub const STANDARD_GRAVITY: f64 = 9.806_65;
/// Mass of atomic hydrogen in atomic mass units.
pub const HYDROGEN_MASS_U: f64 = 1.007_825_032_23;
/// First zero of the Airy function, in absolute value.
pub const AIRY_ZERO_1: f64 = 2.338_107_410_459_767;

pub fn hydrogen_mass() -> f64 {
    HYDROGEN_MASS_U * ATOMIC_MASS_UNIT
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{what} must be positive and finite, got {v}"
        )))
    }
}

/// Energy of the first gravitational quantum state, `(ħ²mg²/2)^{1/3} λ₁`, in joule.
pub fn gravitational_energy_unit(mass: f64, g: f64) -> Result<f64> {
    positive("mass", mass)?;
    positive("g", g)?;
    Ok((HBAR * HBAR * mass * g * g / 2.0).cbrt() * AIRY_ZERO_1)
}

/// `E / E₁`.
pub fn energy_in_e1_units(energy: f64, mass: f64, g: f64) -> Result<f64> {
    positive("energy", energy)?;
    Ok(energy / gravitational_energy_unit(mass, g)?)
}

/// Height of the classical turning point of the first gravitational state, in metres.
pub fn turning_point_height(mass: f64, g: f64) -> Result<f64> {
    Ok(gravitational_energy_unit(mass, g)? / (mass * g))
}

/// `κ = √(2mE)/ħ` in m⁻¹.
pub fn wavevector_si(energy: f64, mass: f64) -> Result<f64> {
    positive("energy", energy)?;
    positive("mass", mass)?;
    Ok((2.0 * mass * energy).sqrt() / HBAR)
}

pub fn mass_in_electron_masses(mass: f64) -> f64 {
    mass / ELECTRON_MASS
}

/// Reduced energy `κ²` in `a₀⁻²` from an energy in hartree, for a particle of
/// `mass_me` electron masses.
pub fn reduced_from_hartree(energy: f64, mass_me: f64) -> f64 {
    2.0 * mass_me * energy
}

/// Inverse of [`reduced_from_hartree`].
pub fn hartree_from_reduced(reduced: f64, mass_me: f64) -> f64 {
    reduced / (2.0 * mass_me)
}

/// Reduced energy `κ²` in `a₀⁻²` from an energy in joule.
pub fn reduced_from_joule(energy: f64, mass: f64) -> f64 {
    reduced_from_hartree(energy / HARTREE, mass_in_electron_masses(mass))
}

/// Reduced energy of `e_over_e1 · E₁`.
pub fn reduced_from_e1_units(e_over_e1: f64, mass: f64, g: f64) -> Result<f64> {
    positive("E/E1", e_over_e1)?;
    Ok(reduced_from_joule(
        e_over_e1 * gravitational_energy_unit(mass, g)?,
        mass,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hydrogen_gravitational_unit() {
        let m = hydrogen_mass();
        let e1 = gravitational_energy_unit(m, STANDARD_GRAVITY).unwrap();
        let pev = e1 / ELECTRON_VOLT * 1e12;
        assert!((pev / 1.407 - 1.0).abs() < 1e-3, "{pev} peV");
        let h1 = turning_point_height(m, STANDARD_GRAVITY).unwrap();
        assert!((h1 * 1e6 / 13.7 - 1.0).abs() < 3e-3, "{h1} m");
        assert!((energy_in_e1_units(e1, m, STANDARD_GRAVITY).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hydrogen_wavevector_at_thousand_e1() {
        let m = hydrogen_mass();
        let e = 1e3 * gravitational_energy_unit(m, STANDARD_GRAVITY).unwrap();
        let kappa = wavevector_si(e, m).unwrap();
        assert!((kappa / 8.237e6 - 1.0).abs() < 1e-3, "{kappa}");
        let kappa_au = reduced_from_e1_units(1e3, m, STANDARD_GRAVITY).unwrap().sqrt();
        assert!((kappa_au / 4.359e-4 - 1.0).abs() < 1e-3, "{kappa_au}");
        assert!((kappa_au - kappa * BOHR_RADIUS).abs() < 1e-9 * kappa_au);
    }

    #[test]
    fn round_trips_and_rejections() {
        let m = 1837.15;
        assert!((hartree_from_reduced(reduced_from_hartree(0.3, m), m) - 0.3).abs() < 1e-16);
        assert!(gravitational_energy_unit(-1.0, 9.8).is_err());
        assert!(wavevector_si(0.0, 1.0).is_err());
        assert!((mass_in_electron_masses(hydrogen_mass()) - 1837.15).abs() < 0.01);
    }
}
