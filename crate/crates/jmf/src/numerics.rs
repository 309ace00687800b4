//! Shared numerical engines: segment quadrature, Cauchy-circle derivatives for
//! holomorphic directions, Wirtinger finite differences for real-analytic
//! directions, and exact reduction of rational torsion points.

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

/// e(w) = exp(2 pi i w).
pub fn e2pi(w: Complex64) -> Complex64 {
    (Complex64::new(0.0, 2.0 * std::f64::consts::PI) * w).exp()
}

/// A point tau = u + iv in the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModularPoint {
    tau: Complex64,
}

impl ModularPoint {
    pub fn new(tau: Complex64) -> Self {
        assert!(tau.im > 0.0, "tau must lie in the upper half-plane");
        Self { tau }
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn u(&self) -> f64 {
        self.tau.re
    }

    pub fn v(&self) -> f64 {
        self.tau.im
    }

    /// q = e(tau).
    pub fn q(&self) -> Complex64 {
        e2pi(self.tau)
    }

    /// q^p for real p, on the principal branch q^p = e(p tau).
    pub fn q_pow(&self, p: f64) -> Complex64 {
        e2pi(p * self.tau)
    }
}

/// A point z = x + iy in the elliptic variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticPoint {
    z: Complex64,
}

impl EllipticPoint {
    pub fn new(z: Complex64) -> Self {
        assert!(z.is_finite(), "z must be finite");
        Self { z }
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn x(&self) -> f64 {
        self.z.re
    }

    pub fn y(&self) -> f64 {
        self.z.im
    }

    /// zeta = e(z).
    pub fn zeta(&self) -> Complex64 {
        e2pi(self.z)
    }
}

/// A rational pair s = (alpha, beta) labelling the torsion point
/// z_s = alpha tau + beta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TorsionPoint {
    alpha: Rational64,
    beta: Rational64,
}

impl TorsionPoint {
    pub fn new(alpha: Rational64, beta: Rational64) -> Self {
        // Ratio normalizes to lowest terms with positive denominator.
        Self { alpha, beta }
    }

    pub fn from_ints(an: i64, ad: i64, bn: i64, bd: i64) -> Self {
        Self::new(Rational64::new(an, ad), Rational64::new(bn, bd))
    }

    pub fn zero() -> Self {
        Self::new(Rational64::zero(), Rational64::zero())
    }

    pub fn alpha(&self) -> Rational64 {
        self.alpha
    }

    pub fn beta(&self) -> Rational64 {
        self.beta
    }

    pub fn alpha_f64(&self) -> f64 {
        self.alpha.to_f64().unwrap()
    }

    pub fn beta_f64(&self) -> f64 {
        self.beta.to_f64().unwrap()
    }

    /// z_s = alpha tau + beta.
    pub fn z_at(&self, tau: ModularPoint) -> Complex64 {
        self.alpha_f64() * tau.tau() + self.beta_f64()
    }

    /// Reduce into the fundamental cell P = [0,1) tau + [0,1).
    ///
    /// Returns (s0, (ka, kb)) with s = s0 + (ka, kb) componentwise and
    /// s0.alpha, s0.beta in [0,1).
    pub fn reduce_to_p(&self) -> (TorsionPoint, (i64, i64)) {
        let ka = self.alpha.floor().to_integer();
        let kb = self.beta.floor().to_integer();
        let s0 = TorsionPoint::new(
            self.alpha - Rational64::from_integer(ka),
            self.beta - Rational64::from_integer(kb),
        );
        (s0, (ka, kb))
    }

    /// Right action of an SL2(Z) element: (alpha, beta) gamma = (a alpha + c beta, b alpha + d beta).
    pub fn act_right(&self, a: i64, b: i64, c: i64, d: i64) -> TorsionPoint {
        TorsionPoint::new(
            self.alpha * Rational64::from_integer(a) + self.beta * Rational64::from_integer(c),
            self.alpha * Rational64::from_integer(b) + self.beta * Rational64::from_integer(d),
        )
    }

    pub fn add_ints(&self, la: i64, mb: i64) -> TorsionPoint {
        TorsionPoint::new(
            self.alpha + Rational64::from_integer(la),
            self.beta + Rational64::from_integer(mb),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.alpha.is_zero() && self.beta.is_zero()
    }
}

/// Truncation and quadrature parameters controlling every evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Precision {
    /// Summation cutoff on lattice indices.
    pub series_terms: usize,
    /// Sample count for segment and circle quadrature.
    pub contour_samples: usize,
    /// Default radius for Cauchy-circle derivative extraction.
    pub cauchy_radius: f64,
    /// Base step for Wirtinger finite differences.
    pub fd_step: f64,
    /// Target truncation tolerance.
    pub target_tol: f64,
}

impl Default for Precision {
    fn default() -> Self {
        Self {
            series_terms: 400,
            contour_samples: 256,
            cauchy_radius: 0.05,
            fd_step: 1e-4,
            target_tol: 1e-12,
        }
    }
}

impl Precision {
    pub fn validate(&self) {
        assert!(self.series_terms > 0);
        assert!(self.contour_samples >= 16, "contour_samples must be >= 16");
        assert!(self.cauchy_radius > 0.0);
        assert!(self.fd_step > 0.0);
        assert!(self.target_tol > 0.0);
    }
}

/// Distance from w to the lattice Z tau + Z in the euclidean metric,
/// reducing through the fundamental cell.
pub fn lattice_distance(w: Complex64, tau: ModularPoint) -> f64 {
    let a = w.im / tau.v();
    let b = w.re - a * tau.u();
    let m0 = a.round() as i64;
    let n0 = b.round() as i64;
    let mut best = f64::INFINITY;
    for dm in -1..=1 {
        for dn in -1..=1 {
            let p = (m0 + dm) as f64 * tau.tau() + Complex64::new((n0 + dn) as f64, 0.0);
            best = best.min((w - p).norm());
        }
    }
    best
}

/// Trapezoid rule for int f dz along the straight segment from start to end.
///
/// Uniform nodes with averaged endpoints; spectrally accurate when the
/// integrand is periodic with the segment as a full period.
pub fn contour_integrate<F>(f: F, start: Complex64, end: Complex64, n: usize) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    assert!(n >= 2);
    let h = (end - start) / n as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..=n {
        let val = f(start + h * k as f64);
        if !val.is_finite() {
            return Err(Error::NonFiniteSample);
        }
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        acc += w * val;
    }
    Ok(acc * h)
}

/// Order-th derivative of a holomorphic function at c via the Cauchy integral
/// on a circle of the given radius.
pub fn cauchy_derivative<F>(g: F, c: Complex64, order: u32, radius: f64, n: usize) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    assert!(n >= 16);
    assert!(radius > 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        let eps = radius * Complex64::new(theta.cos(), theta.sin());
        let val = g(c + eps);
        if !val.is_finite() {
            return Err(Error::NonFiniteSample);
        }
        acc += val * (Complex64::new(0.0, -(order as f64) * theta)).exp();
    }
    let fact: f64 = (1..=order as u64).map(|k| k as f64).product();
    Ok(acc * fact / (n as f64 * radius.powi(order as i32)))
}

/// Wirtinger derivative (d/dx - i d/dy)/2 at p by central differences with one
/// Richardson extrapolation level.
pub fn wirtinger_derivative<F>(g: F, p: Complex64, step: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    let diff = |h: f64| -> Result<Complex64> {
        let gx1 = g(p + Complex64::new(h, 0.0));
        let gx2 = g(p - Complex64::new(h, 0.0));
        let gy1 = g(p + Complex64::new(0.0, h));
        let gy2 = g(p - Complex64::new(0.0, h));
        for v in [gx1, gx2, gy1, gy2] {
            if !v.is_finite() {
                return Err(Error::NonFiniteSample);
            }
        }
        let dx = (gx1 - gx2) / (2.0 * h);
        let dy = (gy1 - gy2) / (2.0 * h);
        Ok((dx - Complex64::i() * dy) / 2.0)
    };
    let d1 = diff(step)?;
    let d2 = diff(step / 2.0)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// Nested Wirtinger derivative of the given order. Step sizes widen with the
/// nesting depth to balance truncation against cancellation.
pub fn wirtinger_n<F>(g: &F, p: Complex64, order: u32, base_step: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    fn rec<F>(g: &F, p: Complex64, order: u32, base_step: f64) -> Result<Complex64>
    where
        F: Fn(Complex64) -> Complex64,
    {
        if order == 0 {
            let v = g(p);
            if !v.is_finite() {
                return Err(Error::NonFiniteSample);
            }
            return Ok(v);
        }
        let step = base_step.powf(1.0 / order as f64);
        let inner = |w: Complex64| rec(g, w, order - 1, base_step).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        wirtinger_derivative(inner, p, step)
    }
    rec(g, p, order, base_step)
}

/// m-th Wirtinger derivative of a real-analytic function by circle sampling.
///
/// On the circle of radius r the e^{i m theta} Fourier coefficient of
/// g(c + r e^{i theta}) equals sum_{b >= 0} c_{m+b,b} r^{m+2b}, where c_{a,b}
/// are the coefficients of the double Taylor expansion in (eps, conj eps).
/// Extrapolating F(r)/r^m to r = 0 across `depth` radii (polynomial in r^2)
/// leaves c_{m,0} = d^m g / m!. Far more accurate than nested difference
/// stencils for orders above one.
pub fn wirtinger_circle<F>(
    g: &F,
    center: Complex64,
    order: u32,
    radius: f64,
    n: usize,
    depth: usize,
) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    assert!(n >= 16 && depth >= 1 && radius > 0.0);
    let mut xs = Vec::with_capacity(depth);
    let mut fs = Vec::with_capacity(depth);
    let mut r = radius;
    for _ in 0..depth {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let w = Complex64::new(t.cos(), t.sin());
            let v = g(center + r * w);
            if !v.is_finite() {
                return Err(Error::NonFiniteSample);
            }
            acc += v * w.powi(-(order as i32));
        }
        xs.push(r * r);
        fs.push(acc / n as f64 / r.powi(order as i32));
        r *= 0.72;
    }
    // Lagrange extrapolation to r^2 = 0
    let mut out = Complex64::new(0.0, 0.0);
    for j in 0..depth {
        let mut w = 1.0;
        for k in 0..depth {
            if k != j {
                w *= xs[k] / (xs[k] - xs[j]);
            }
        }
        out += w * fs[j];
    }
    let mut fact = 1.0;
    for i in 1..=order as u64 {
        fact *= i as f64;
    }
    Ok(fact * out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn reduce_examples() {
        let s = TorsionPoint::from_ints(0, 1, 0, 1);
        assert_eq!(s.reduce_to_p(), (TorsionPoint::zero(), (0, 0)));

        let s = TorsionPoint::from_ints(-1, 2, 1, 2);
        let (s0, k) = s.reduce_to_p();
        assert_eq!(s0, TorsionPoint::from_ints(1, 2, 1, 2));
        assert_eq!(k, (-1, 0));

        let s = TorsionPoint::from_ints(5, 4, -3, 2);
        let (s0, k) = s.reduce_to_p();
        assert_eq!(s0, TorsionPoint::from_ints(1, 4, 1, 2));
        assert_eq!(k, (1, -2));
    }

    #[test]
    fn reduce_is_idempotent() {
        let s = TorsionPoint::from_ints(7, 3, -9, 5);
        let (s0, _) = s.reduce_to_p();
        assert_eq!(s0.reduce_to_p(), (s0, (0, 0)));
    }

    #[test]
    fn contour_constant() {
        let val = contour_integrate(|_| c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), 64).unwrap();
        assert_abs_diff_eq!(val.re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(val.im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn contour_character_vanishes() {
        let val = contour_integrate(|z| e2pi(z), c(0.0, 0.0), c(1.0, 0.0), 64).unwrap();
        assert!(val.norm() < 1e-14);
    }

    #[test]
    fn contour_orthogonality_offset_path() {
        let start = c(0.0, 0.3);
        let val = contour_integrate(|z| e2pi(2.0 * z) + 5.0, start, start + 1.0, 64).unwrap();
        assert_abs_diff_eq!(val.re, 5.0, epsilon = 1e-13);
        assert!(val.im.abs() < 1e-13);
    }

    #[test]
    fn contour_trig_polynomial_exact() {
        // degree < n/2 over one period is exact to ~machine precision
        let f = |z: Complex64| {
            (1..=10).map(|k| e2pi(k as f64 * z) + e2pi(-(k as f64) * z)).sum::<Complex64>() + 2.0
        };
        let val = contour_integrate(f, c(0.0, 0.0), c(1.0, 0.0), 64).unwrap();
        assert!((val - 2.0).norm() < 10.0 * f64::EPSILON * 22.0);
    }

    #[test]
    fn contour_nonfinite() {
        let r = contour_integrate(|z| 1.0 / z, c(-0.5, 0.0), c(0.5, 0.0), 16);
        assert!(matches!(r, Err(Error::NonFiniteSample)) || r.is_ok());
        // division by exactly zero at midpoint node gives inf
        let r = contour_integrate(|z| 1.0 / z, c(-0.5, 0.0), c(0.5, 0.0), 2);
        assert!(matches!(r, Err(Error::NonFiniteSample)));
    }

    #[test]
    fn cauchy_polynomial() {
        let d = cauchy_derivative(|e| e * e, c(0.0, 0.0), 2, 0.3, 64).unwrap();
        assert!((d - 2.0).norm() < 1e-12);
    }

    #[test]
    fn cauchy_exponential() {
        let d = cauchy_derivative(|e| e.exp(), c(0.0, 0.0), 5, 0.5, 128).unwrap();
        assert!((d - 1.0).norm() < 1e-12);
    }

    #[test]
    fn cauchy_geometric() {
        let d = cauchy_derivative(|e| 1.0 / (1.0 - e), c(0.0, 0.0), 3, 0.5, 256).unwrap();
        assert!((d - 6.0).norm() < 1e-10);
    }

    #[test]
    fn cauchy_radius_independence() {
        let g = |e: Complex64| (2.0 * e).sin() + e.exp();
        let d1 = cauchy_derivative(g, c(0.1, 0.2), 3, 0.05, 256).unwrap();
        let d2 = cauchy_derivative(g, c(0.1, 0.2), 3, 0.1, 256).unwrap();
        assert!((d1 - d2).norm() < 1e-10);
    }

    #[test]
    fn wirtinger_identity() {
        let d = wirtinger_derivative(|w| w, c(0.3, 0.4), 1e-4).unwrap();
        assert!((d - 1.0).norm() < 1e-10);
    }

    #[test]
    fn wirtinger_im() {
        let d = wirtinger_derivative(|w| Complex64::new(w.im, 0.0), c(0.3, 0.4), 1e-4).unwrap();
        assert!((d - c(0.0, -0.5)).norm() < 1e-10);
    }

    #[test]
    fn wirtinger_abs_square() {
        let p = c(0.7, -0.2);
        let d = wirtinger_derivative(|w| Complex64::new(w.norm_sqr(), 0.0), p, 1e-4).unwrap();
        assert!((d - p.conj()).norm() < 1e-9);
    }

    #[test]
    fn wirtinger_matches_cauchy_for_holomorphic() {
        let g = |w: Complex64| (w * w).exp();
        let p = c(0.2, 0.1);
        let dw = wirtinger_derivative(g, p, 1e-4).unwrap();
        let dc = cauchy_derivative(g, p, 1, 0.1, 128).unwrap();
        assert!((dw - dc).norm() < 1e-9);
    }

    #[test]
    fn wirtinger_circle_mixed_function() {
        // g = e^{2 eps} cos(conj eps): the m-th eps-derivative at 0 is 2^m
        let g = |w: Complex64| (2.0 * w).exp() * w.conj().cos();
        for m in 0..4u32 {
            let d = wirtinger_circle(&g, c(0.0, 0.0), m, 0.05, 64, 4).unwrap();
            let want = 2f64.powi(m as i32);
            assert!((d - want).norm() < 1e-9, "m={m}: {d} vs {want}");
        }
    }

    #[test]
    fn wirtinger_circle_beats_stencils_at_high_order() {
        let g = |w: Complex64| (3.0 * w).exp() * Complex64::new(w.norm_sqr(), 0.0).exp();
        let want = 27.0; // third derivative of e^{3 eps} at 0, conj-part flat
        let d = wirtinger_circle(&g, c(0.0, 0.0), 3, 0.05, 64, 4).unwrap();
        assert!((d - want).norm() < 1e-7, "{d}");
    }

    #[test]
    fn lattice_distance_basic() {
        let tau = ModularPoint::new(c(0.0, 1.0));
        assert!(lattice_distance(c(0.0, 0.0), tau) < 1e-15);
        assert!(lattice_distance(c(1.0, 1.0), tau) < 1e-15);
        assert_abs_diff_eq!(lattice_distance(c(0.5, 0.0), tau), 0.5, epsilon = 1e-12);
    }
}
