use nalgebra::{DMatrix, Matrix4, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

const SCHUR_MAX_ITER: usize = 10_000;

fn sort_spectrum(v: &mut [Complex64]) {
    v.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

/// Eigenvalues of a 4x4 real matrix, sorted by decreasing real part.
pub fn eigenvalues(m: &Matrix4<f64>) -> Result<Vec<Complex64>> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::NumericDomain("eigenvalues"));
    }
    let schur = Schur::try_new(*m, f64::EPSILON, SCHUR_MAX_ITER).ok_or(Error::EigenNoConvergence)?;
    let mut out: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    sort_spectrum(&mut out);
    Ok(out)
}

pub fn max_real_part(eigs: &[Complex64]) -> f64 {
    eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Roots of the monic polynomial `x^n + c[0] x^(n-1) + ... + c[n-1]`.
pub fn monic_roots(c: &[f64]) -> Result<Vec<Complex64>> {
    let n = c.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if !c.iter().all(|v| v.is_finite()) {
        return Err(Error::NumericDomain("polynomial roots"));
    }
    let mut comp = DMatrix::<f64>::zeros(n, n);
    for (j, cj) in c.iter().enumerate() {
        comp[(0, j)] = -cj;
    }
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    let schur = Schur::try_new(comp, f64::EPSILON, SCHUR_MAX_ITER).ok_or(Error::EigenNoConvergence)?;
    let mut out: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    sort_spectrum(&mut out);
    Ok(out)
}

/// Horner evaluation of a monic polynomial in the same layout as [`monic_roots`].
pub fn eval_monic(c: &[f64], x: f64) -> f64 {
    c.iter().fold(1.0, |acc, ci| acc * x + ci)
}

/// Coefficients (without the leading 1) of `prod (x - z_i)`, real parts kept.
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut p = vec![Complex64::new(1.0, 0.0)];
    for z in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); p.len() + 1];
        for (k, c) in p.iter().enumerate() {
            next[k] += c;
            next[k + 1] -= c * z;
        }
        p = next;
    }
    p[1..].iter().map(|c| c.re).collect()
}

/// Characteristic polynomial `rho^4 + c1 rho^3 + c2 rho^2 + c3 rho + c4` by Faddeev-LeVerrier.
pub fn char_poly(m: &Matrix4<f64>) -> [f64; 4] {
    let mut c = [0.0; 4];
    let mut mk = *m;
    for k in 1..=4 {
        let ck = -mk.trace() / k as f64;
        c[k - 1] = ck;
        if k < 4 {
            mk = m * (mk + Matrix4::identity() * ck);
        }
    }
    c
}

/// Real-coefficient polynomial in ascending powers, used for exact elimination.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn constant(c: f64) -> Self {
        Self(vec![c])
    }

    pub fn new(c: &[f64]) -> Self {
        Self(c.to_vec())
    }

    pub fn degree(&self) -> usize {
        self.0.iter().rposition(|c| *c != 0.0).unwrap_or(0)
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.0.len().max(o.0.len());
        Self((0..n)
            .map(|k| self.0.get(k).copied().unwrap_or(0.0) + o.0.get(k).copied().unwrap_or(0.0))
            .collect())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.iter().map(|c| c * s).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-1.0))
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = vec![0.0; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self(out)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Descending coefficients after dividing by the leading one, leading 1 dropped.
    pub fn monic_tail(&self) -> Vec<f64> {
        let deg = self.degree();
        let lead = self.0[deg];
        (0..deg).rev().map(|k| self.0[k] / lead).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_spectrum() {
        let m = Matrix4::from_diagonal(&nalgebra::Vector4::new(3.0, -1.0, 0.5, -7.0));
        let e = eigenvalues(&m).unwrap();
        let re: Vec<f64> = e.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![3.0, 0.5, -1.0, -7.0]);
        assert!(e.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn companion_of_known_factorisation() {
        // (x^2 + 1)(x + 2)(x + 3) = x^4 + 5x^3 + 7x^2 + 5x + 6
        let r = monic_roots(&[5.0, 7.0, 5.0, 6.0]).unwrap();
        let want = [Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0), Complex64::new(-2.0, 0.0), Complex64::new(-3.0, 0.0)];
        for w in want {
            assert!(r.iter().any(|z| (z - w).norm() < 1e-12), "{w} missing from {r:?}");
        }
    }

    #[test]
    fn leverrier_matches_roots() {
        let m = Matrix4::new(1.0, 2.0, 0.0, -1.0, 0.5, -3.0, 1.0, 0.0, 0.0, 4.0, -2.0, 1.0, 1.0, 0.0, 0.3, -0.5);
        let c = char_poly(&m);
        let from_eigs = poly_from_roots(&eigenvalues(&m).unwrap());
        for (a, b) in c.iter().zip(&from_eigs) {
            assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
        }
        assert!((c[3] - m.determinant()).abs() < 1e-10);
    }

    #[test]
    fn poly_algebra() {
        let p = Poly::new(&[1.0, 1.0]).mul(&Poly::new(&[-2.0, 1.0]));
        assert_eq!(p.0, vec![-2.0, -1.0, 1.0]);
        assert_eq!(p.eval(2.0), 0.0);
        assert_eq!(p.monic_tail(), vec![-1.0, -2.0]);
    }
}
