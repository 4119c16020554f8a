use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_nonpositive_integer(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// Lanczos sum for `Re z >= 1/2`, returning `Γ(z)`.
fn lanczos(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut acc = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (k, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * ((z + 0.5) * t.ln() - t).exp() * acc
}

/// `Γ(z)` for complex `z`, using reflection for `Re z < 1/2`.
pub fn gamma(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain {
            what: "gamma",
            value: z.re,
        });
    }
    if is_nonpositive_integer(z) {
        return Err(Error::Pole {
            what: "gamma",
            value: z.re,
        });
    }
    if z.re < 0.5 {
        let s = (PI * z).sin();
        Ok(PI / (s * lanczos(1.0 - z)))
    } else {
        Ok(lanczos(z))
    }
}

/// `Γ(x)` on the real line.
pub fn gamma_real(x: f64) -> Result<f64> {
    gamma(Complex64::new(x, 0.0)).map(|g| g.re)
}

/// `1/Γ(z)`, an entire function: exactly zero at the poles of `Γ`.
pub fn recip_gamma(z: Complex64) -> Complex64 {
    if is_nonpositive_integer(z) {
        return Complex64::new(0.0, 0.0);
    }
    if z.re < 0.5 {
        (PI * z).sin() * lanczos(1.0 - z) / PI
    } else {
        1.0 / lanczos(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn integer_and_half_integer_values() {
        assert!((gamma(c(1.0)).unwrap() - 1.0).norm() < 1e-15);
        let mut fact = 1.0;
        for n in 1..15 {
            fact *= n as f64;
            let g = gamma(c(n as f64 + 1.0)).unwrap();
            assert!((g.re / fact - 1.0).abs() < 1e-13, "n = {n}");
        }
        let sqrt_pi = PI.sqrt();
        assert!((gamma(c(0.5)).unwrap().re - sqrt_pi).abs() < 1e-14);
        assert!((gamma(c(-0.5)).unwrap().re + 2.0 * sqrt_pi).abs() < 1e-13);
    }

    #[test]
    fn poles_are_errors() {
        for x in [0.0, -1.0, -7.0] {
            assert!(matches!(gamma(c(x)), Err(Error::Pole { .. })));
            assert_eq!(recip_gamma(c(x)), c(0.0));
        }
    }

    #[test]
    fn reflection_formula_on_unit_interval() {
        for i in 1..100 {
            let x = i as f64 / 100.0;
            let prod = gamma(c(x)).unwrap().re * gamma(c(1.0 - x)).unwrap().re * (PI * x).sin() / PI;
            assert!((prod - 1.0).abs() < 1e-10, "x = {x}: {prod}");
        }
    }

    #[test]
    fn appendix_constant_i4() {
        // 5 Γ(5/4)² / (3√π) ≈ 0.772531
        let g = gamma(c(1.25)).unwrap().re;
        let i4 = 5.0 * g * g / (3.0 * PI.sqrt());
        assert!((i4 - 0.772531).abs() < 5e-7, "{i4}");
    }

    #[test]
    fn complex_recurrence_and_conjugation() {
        for &(re, im) in &[(0.3, 0.7), (-2.4, 1.1), (5.5, -3.0), (12.0, 6.0), (-0.5, -0.25)] {
            let z = Complex64::new(re, im);
            let lhs = gamma(z + 1.0).unwrap();
            let rhs = z * gamma(z).unwrap();
            assert!((lhs - rhs).norm() < 1e-12 * lhs.norm(), "z = {z}");
            let conj = gamma(z.conj()).unwrap();
            assert!((conj - gamma(z).unwrap().conj()).norm() < 1e-13 * conj.norm());
            let rg = recip_gamma(z);
            assert!((rg * gamma(z).unwrap() - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn known_complex_modulus() {
        // |Γ(iy)|² = π / (y sinh(πy))
        for y in [0.5_f64, 1.0, 2.5] {
            let g = gamma(Complex64::new(0.0, y)).unwrap();
            let expected = PI / (y * (PI * y).sinh());
            assert!((g.norm_sqr() / expected - 1.0).abs() < 1e-12);
        }
    }
}
