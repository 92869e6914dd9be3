use nalgebra::{Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use super::SolverError;

/// Compressible Neohookean material in plane strain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self {
            youngs_modulus: 1440.0,
            poisson_ratio: 0.25,
        }
    }
}

impl MaterialParams {
    pub fn new(youngs_modulus: f64, poisson_ratio: f64) -> Result<Self, String> {
        let m = Self {
            youngs_modulus,
            poisson_ratio,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.youngs_modulus > 0.0) {
            return Err(format!(
                "Young's modulus must be > 0, got {}",
                self.youngs_modulus
            ));
        }
        if !(self.poisson_ratio > 0.0 && self.poisson_ratio < 0.5) {
            return Err(format!(
                "Poisson ratio must lie in (0, 0.5), got {}",
                self.poisson_ratio
            ));
        }
        Ok(())
    }

    /// First Lame constant.
    pub fn lame_1(&self) -> f64 {
        let (e, nu) = (self.youngs_modulus, self.poisson_ratio);
        e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    }

    /// Shear modulus.
    pub fn lame_2(&self) -> f64 {
        self.youngs_modulus / (2.0 * (1.0 + self.poisson_ratio))
    }

    /// `P = l2 (F - F^-T) + l1 ln(det F) F^-T`.
    pub fn piola_stress(&self, f: &Matrix2<f64>) -> Result<Matrix2<f64>, SolverError> {
        let det = f.determinant();
        if !(det > 0.0) {
            return Err(SolverError::InvertedElement { element: None, det });
        }
        let h = f.try_inverse().expect("positive determinant").transpose();
        Ok((f - h) * self.lame_2() + h * (self.lame_1() * det.ln()))
    }

    /// Material tangent `dP_iJ / dF_kL`, stored at `(2i + J, 2k + L)`.
    pub fn tangent(&self, f: &Matrix2<f64>) -> Result<Matrix4<f64>, SolverError> {
        let det = f.determinant();
        if !(det > 0.0) {
            return Err(SolverError::InvertedElement { element: None, det });
        }
        let finv = f.try_inverse().expect("positive determinant");
        let (l1, l2) = (self.lame_1(), self.lame_2());
        let c = l2 - l1 * det.ln();
        let mut a = Matrix4::zeros();
        for i in 0..2 {
            for jj in 0..2 {
                for k in 0..2 {
                    for ll in 0..2 {
                        let mut v =
                            c * finv[(jj, k)] * finv[(ll, i)] + l1 * finv[(jj, i)] * finv[(ll, k)];
                        if i == k && jj == ll {
                            v += l2;
                        }
                        a[(2 * i + jj, 2 * k + ll)] = v;
                    }
                }
            }
        }
        Ok(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lame_constants() {
        let m = MaterialParams::default();
        assert_relative_eq!(m.lame_1(), 576.0, epsilon = 1e-12);
        assert_relative_eq!(m.lame_2(), 576.0, epsilon = 1e-12);
        assert!(MaterialParams::new(1.0, 0.5).is_err());
        assert!(MaterialParams::new(-1.0, 0.3).is_err());
    }

    #[test]
    fn reference_state_is_stress_free() {
        let p = MaterialParams::default()
            .piola_stress(&Matrix2::identity())
            .unwrap();
        assert_eq!(p, Matrix2::zeros());
    }

    #[test]
    fn uniaxial_hand_value() {
        let m = MaterialParams::default();
        let p = m.piola_stress(&Matrix2::new(2.0, 0.0, 0.0, 1.0)).unwrap();
        let expected = 576.0 * 1.5 + 576.0 * 2f64.ln() * 0.5;
        assert_relative_eq!(p[(0, 0)], expected, epsilon = 1e-10);
        assert_relative_eq!(p[(0, 0)], 1063.63, epsilon = 0.01);
    }

    #[test]
    fn small_strain_limit() {
        let m = MaterialParams::default();
        let eps = 1e-6;
        let p = m
            .piola_stress(&Matrix2::new(1.0 + eps, 0.0, 0.0, 1.0))
            .unwrap();
        let lin = (m.lame_1() + 2.0 * m.lame_2()) * eps;
        assert!((p[(0, 0)] - lin).abs() <= 1e-4 * lin);
    }

    #[test]
    fn inversion_is_rejected() {
        let m = MaterialParams::default();
        let r = m.piola_stress(&Matrix2::new(-1.0, 0.0, 0.0, 1.0));
        assert!(matches!(r, Err(SolverError::InvertedElement { .. })));
    }

    #[test]
    fn tangent_matches_finite_differences() {
        let m = MaterialParams::default();
        let f = Matrix2::new(1.2, 0.1, -0.05, 0.9);
        let a = m.tangent(&f).unwrap();
        let h = 1e-6;
        for k in 0..2 {
            for l in 0..2 {
                let mut fp = f;
                let mut fm = f;
                fp[(k, l)] += h;
                fm[(k, l)] -= h;
                let dp = (m.piola_stress(&fp).unwrap() - m.piola_stress(&fm).unwrap()) / (2.0 * h);
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((dp[(i, j)] - a[(2 * i + j, 2 * k + l)]).abs() < 1e-5);
                    }
                }
            }
        }
        // major symmetry of a hyperelastic tangent
        assert_relative_eq!(a, a.transpose(), epsilon = 1e-10);
    }
}
