//! First-order surrogate kernels used by both SCA subproblems.
//!
//! Every kernel is tangent to its target at the expansion point and bounds
//! it from below everywhere (the targets are convex, or the product case is
//! handled through its difference-of-squares identity). Each kernel is
//! exposed as a coefficient bundle plus a point evaluator so the conic
//! assembler and the evaluators share one algebra source.
//!
//! A real-affine functional of a complex vector `z` is represented as
//! `Re{ w^H z }`; the assembler expands this over interleaved (re, im)
//! variable pairs.

use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TaylorError {
    #[error("expansion denominator must be positive, got {0}")]
    NonpositiveDenominator(f64),
}

/// Lower bound of the quadratic-over-linear form `|h^H u|^2 / x` (`x > 0`),
/// affine in `(u, x)`:
///
/// ```text
///   f(u, x) = Re{ w^H u } + x_coeff * x
/// ```
#[derive(Debug, Clone)]
pub struct QuadOverLinBound {
    pub w: DVector<Complex64>,
    pub x_coeff: f64,
}

impl QuadOverLinBound {
    pub fn new(
        h: &DVector<Complex64>,
        u0: &DVector<Complex64>,
        x0: f64,
    ) -> Result<Self, TaylorError> {
        if !(x0 > 0.0) {
            return Err(TaylorError::NonpositiveDenominator(x0));
        }
        let c0 = h.dotc(u0); // h^H u0
        let w = h * Complex64::from(2.0 / x0) * c0;
        let x_coeff = -c0.norm_sqr() / (x0 * x0);
        Ok(Self { w, x_coeff })
    }

    pub fn eval(&self, u: &DVector<Complex64>, x: f64) -> f64 {
        self.w.dotc(u).re + self.x_coeff * x
    }
}

/// Tangent lower bound of `2^x` at `x0`: `slope * x + constant`.
#[derive(Debug, Clone, Copy)]
pub struct Exp2Bound {
    pub slope: f64,
    pub constant: f64,
}

impl Exp2Bound {
    pub fn new(x0: f64) -> Self {
        let v0 = x0.exp2();
        let ln2 = std::f64::consts::LN_2;
        Self { slope: v0 * ln2, constant: v0 * (1.0 - ln2 * x0) }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.constant
    }
}

/// Lower bound of `|a^H b|^2`, affine in `b` around `b0`:
/// `Re{ w^H b } + constant`.
#[derive(Debug, Clone)]
pub struct QuadBound {
    pub w: DVector<Complex64>,
    pub constant: f64,
}

impl QuadBound {
    pub fn new(a: &DVector<Complex64>, b0: &DVector<Complex64>) -> Self {
        let c0 = a.dotc(b0); // a^H b0
        Self { w: a * Complex64::from(2.0) * c0, constant: -c0.norm_sqr() }
    }

    pub fn eval(&self, b: &DVector<Complex64>) -> f64 {
        self.w.dotc(b).re + self.constant
    }
}

/// Lower bound of the shifted quadratic `|c + t^H s|^2`, affine in `s`
/// around `s0`: `Re{ w^H s } + constant`.
#[derive(Debug, Clone)]
pub struct ShiftedQuadBound {
    pub w: DVector<Complex64>,
    pub constant: f64,
}

impl ShiftedQuadBound {
    pub fn new(c: Complex64, t: &DVector<Complex64>, s0: &DVector<Complex64>) -> Self {
        let e0 = c + t.dotc(s0); // c + t^H s0
        // exact first-order expansion: |e0|^2 + 2 Re{ e0^* t^H (s - s0) },
        // whose constant simplifies to |c|^2 - |t^H s0|^2
        let constant = c.norm_sqr() - t.dotc(s0).norm_sqr();
        Self { w: t * Complex64::from(2.0) * e0, constant }
    }

    pub fn eval(&self, s: &DVector<Complex64>) -> f64 {
        self.w.dotc(s).re + self.constant
    }
}

/// Concave lower bound of the bilinear product `x * y` around `(x0, y0)`,
/// from `xy = ((x+y)^2 - (x-y)^2) / 4` with the convex square linearized:
///
/// ```text
///   f(x, y) = sum_coeff * (x + y) + constant - (x - y)^2 / 4
/// ```
#[derive(Debug, Clone, Copy)]
pub struct ProductBound {
    pub sum_coeff: f64,
    pub constant: f64,
}

impl ProductBound {
    pub fn new(x0: f64, y0: f64) -> Self {
        let s = x0 + y0;
        Self { sum_coeff: 0.5 * s, constant: -0.25 * s * s }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.sum_coeff * (x + y) + self.constant - 0.25 * (x - y) * (x - y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_cvec(rng: &mut ChaCha8Rng, n: usize) -> DVector<Complex64> {
        DVector::from_iterator(
            n,
            (0..n).map(|_| Complex64::new(rng.gen::<f64>() * 4.0 - 2.0, rng.gen::<f64>() * 4.0 - 2.0)),
        )
    }

    fn rel_close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-12)
    }

    #[test]
    fn quad_over_lin_tangency_and_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let n = rng.gen_range(1..5);
            let h = rand_cvec(&mut rng, n);
            let u0 = rand_cvec(&mut rng, n);
            let x0 = rng.gen::<f64>() * 3.0 + 0.05;
            let b = QuadOverLinBound::new(&h, &u0, x0).unwrap();
            let target0 = h.dotc(&u0).norm_sqr() / x0;
            assert!(rel_close(b.eval(&u0, x0), target0));
            let u = rand_cvec(&mut rng, n);
            let x = rng.gen::<f64>() * 3.0 + 0.05;
            let target = h.dotc(&u).norm_sqr() / x;
            assert!(b.eval(&u, x) <= target + 1e-9 * target.max(1.0));
        }
    }

    #[test]
    fn quad_over_lin_zero_channel_and_bad_denominator() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u0 = rand_cvec(&mut rng, 3);
        let h = DVector::from_element(3, Complex64::new(0.0, 0.0));
        let b = QuadOverLinBound::new(&h, &u0, 1.0).unwrap();
        let u = rand_cvec(&mut rng, 3);
        assert_eq!(b.eval(&u, 2.5), 0.0);
        assert!(QuadOverLinBound::new(&u0, &u0, 0.0).is_err());
        assert!(QuadOverLinBound::new(&u0, &u0, -1.0).is_err());
    }

    #[test]
    fn exp2_tangency_hand_value_and_bound() {
        let b = Exp2Bound::new(0.0);
        assert!(rel_close(b.eval(0.0), 1.0));
        let v = b.eval(1.0);
        assert!((v - (1.0 + std::f64::consts::LN_2)).abs() < 1e-12);
        assert!(v < 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let x0 = rng.gen::<f64>() * 20.0 - 10.0;
            let x = rng.gen::<f64>() * 20.0 - 10.0;
            let b = Exp2Bound::new(x0);
            assert!(rel_close(b.eval(x0), x0.exp2()));
            assert!(b.eval(x) <= x.exp2() + 1e-9 * x.exp2());
        }
    }

    #[test]
    fn quad_tangency_and_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10_000 {
            let n = rng.gen_range(1..5);
            let a = rand_cvec(&mut rng, n);
            let b0 = rand_cvec(&mut rng, n);
            let bnd = QuadBound::new(&a, &b0);
            assert!(rel_close(bnd.eval(&b0), a.dotc(&b0).norm_sqr()));
            let b = rand_cvec(&mut rng, n);
            let target = a.dotc(&b).norm_sqr();
            assert!(bnd.eval(&b) <= target + 1e-9 * target.max(1.0));
        }
        // zero data vector collapses to the zero functional
        let z = DVector::from_element(2, Complex64::new(0.0, 0.0));
        let bnd = QuadBound::new(&z, &rand_cvec(&mut rng, 2));
        assert_eq!(bnd.eval(&rand_cvec(&mut rng, 2)), 0.0);
    }

    #[test]
    fn shifted_quad_tangency_bound_and_degenerate_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let n = rng.gen_range(1..5);
            let c = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            let t = rand_cvec(&mut rng, n);
            let s0 = rand_cvec(&mut rng, n);
            let bnd = ShiftedQuadBound::new(c, &t, &s0);
            let target0 = (c + t.dotc(&s0)).norm_sqr();
            assert!(rel_close(bnd.eval(&s0), target0));
            let s = rand_cvec(&mut rng, n);
            let target = (c + t.dotc(&s)).norm_sqr();
            assert!(bnd.eval(&s) <= target + 1e-9 * target.max(1.0));
        }
        // t = 0: the target is the constant |c|^2 and the bound matches it
        // everywhere (the s-dependence vanishes)
        let c = Complex64::new(1.5, -0.5);
        let t = DVector::from_element(3, Complex64::new(0.0, 0.0));
        let bnd = ShiftedQuadBound::new(c, &t, &rand_cvec(&mut rng, 3));
        let at = bnd.eval(&rand_cvec(&mut rng, 3));
        assert!((at - c.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn product_bound_tangency_hand_value_and_bound() {
        let b = ProductBound::new(1.0, 1.0);
        assert!(rel_close(b.eval(1.0, 1.0), 1.0));
        // equality case away from the expansion point
        assert!((b.eval(2.0, 0.0) - 0.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10_000 {
            let x0 = rng.gen::<f64>() * 8.0 - 4.0;
            let y0 = rng.gen::<f64>() * 8.0 - 4.0;
            let b = ProductBound::new(x0, y0);
            assert!(rel_close(b.eval(x0, y0), x0 * y0));
            let x = rng.gen::<f64>() * 8.0 - 4.0;
            let y = rng.gen::<f64>() * 8.0 - 4.0;
            assert!(b.eval(x, y) <= x * y + 1e-9 * (x * y).abs().max(1.0));
        }
    }

    #[test]
    fn affine_kernels_interpolate_exactly_along_segments() {
        // affinity check: f(mid) == (f(a)+f(b))/2 for random segments
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = 3;
            let h = rand_cvec(&mut rng, n);
            let u0 = rand_cvec(&mut rng, n);
            let bnd = QuadOverLinBound::new(&h, &u0, 1.3).unwrap();
            let (ua, ub) = (rand_cvec(&mut rng, n), rand_cvec(&mut rng, n));
            let (xa, xb) = (rng.gen::<f64>() + 0.1, rng.gen::<f64>() + 0.1);
            let mid = bnd.eval(&((&ua + &ub) * Complex64::from(0.5)), 0.5 * (xa + xb));
            let avg = 0.5 * (bnd.eval(&ua, xa) + bnd.eval(&ub, xb));
            assert!(rel_close(mid, avg));
        }
    }

    #[test]
    fn product_bound_hessian_is_negative_semidefinite() {
        // quadratic part is -(x-y)^2/4: eigenvalues 0 and -1/2
        let b = ProductBound::new(0.7, -1.2);
        let f = |x: f64, y: f64| b.eval(x, y);
        let h = 1e-4;
        let fxx = (f(h, 0.0) - 2.0 * f(0.0, 0.0) + f(-h, 0.0)) / (h * h);
        let fyy = (f(0.0, h) - 2.0 * f(0.0, 0.0) + f(0.0, -h)) / (h * h);
        let fxy = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
        let trace = fxx + fyy;
        let det = fxx * fyy - fxy * fxy;
        assert!(trace <= 1e-6 && det >= -1e-6, "trace {trace}, det {det}");
    }
}
