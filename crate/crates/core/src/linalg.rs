//! Small dense complex-vector helpers.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// `a† b`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    norm_sqr(a).sqrt()
}

/// Returns `a / ‖a‖`, or `None` when the norm is below `tol`.
pub fn normalized(a: &[Complex64], tol: f64) -> Option<Vec<Complex64>> {
    let n = norm(a);
    if !(n > tol) {
        return None;
    }
    Some(a.iter().map(|x| x / n).collect())
}

/// `|a† b|²`.
pub fn gain(a: &[Complex64], b: &[Complex64]) -> f64 {
    inner(a, b).norm_sqr()
}

/// Circularly-symmetric complex Gaussian with `E|z|² = 2·scale²`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

/// Isotropically distributed unit vector in `C^dim`.
pub fn isotropic_unit<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..dim).map(|_| complex_normal(rng, 1.0)).collect();
        if let Some(u) = normalized(&v, 1e-300) {
            return u;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_conjugates_left_argument() {
        let a = [Complex64::new(0.0, 1.0)];
        let b = [Complex64::new(0.0, 1.0)];
        assert_eq!(inner(&a, &b), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn zero_vector_has_no_direction() {
        assert!(normalized(&[Complex64::new(0.0, 0.0); 3], 1e-12).is_none());
    }
}
