//! Differential operators: the level-M heat operator, Maass raising
//! operators and their iterates, the hyperbolic Laplacian, and the identity
//! linking normalized eps-derivatives against F^{(0,0)} to raising iterates.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{cauchy_derivative, wirtinger_derivative, wirtinger_n, ModularPoint, Precision};

const TWO_PI_I: Complex64 = Complex64 { re: 0.0, im: 2.0 * std::f64::consts::PI };

/// A smooth function of (eps; tau). The flag selects Cauchy circles versus
/// Wirtinger differences for eps-derivatives.
pub struct SmoothFn2<'a> {
    pub f: Box<dyn Fn(Complex64, ModularPoint) -> Complex64 + 'a>,
    pub holomorphic_eps: bool,
}

impl<'a> SmoothFn2<'a> {
    pub fn holomorphic(f: impl Fn(Complex64, ModularPoint) -> Complex64 + 'a) -> Self {
        Self { f: Box::new(f), holomorphic_eps: true }
    }

    pub fn real_analytic(f: impl Fn(Complex64, ModularPoint) -> Complex64 + 'a) -> Self {
        Self { f: Box::new(f), holomorphic_eps: false }
    }

    /// n-th eps-derivative at fixed tau.
    fn eps_deriv(&self, n: u32, eps: Complex64, tau: ModularPoint, p: Precision) -> Result<Complex64> {
        if n == 0 {
            let v = (self.f)(eps, tau);
            if !v.is_finite() {
                return Err(Error::NonFiniteSample);
            }
            return Ok(v);
        }
        if self.holomorphic_eps {
            cauchy_derivative(
                |e| (self.f)(e, tau),
                eps,
                n,
                p.cauchy_radius,
                p.contour_samples,
            )
        } else {
            wirtinger_n(&|e| (self.f)(e, tau), eps, n, p.fd_step)
        }
    }
}

pub struct SmoothFn1<'a> {
    pub f: Box<dyn Fn(ModularPoint) -> Complex64 + 'a>,
}

impl<'a> SmoothFn1<'a> {
    pub fn new(f: impl Fn(ModularPoint) -> Complex64 + 'a) -> Self {
        Self { f: Box::new(f) }
    }
}

fn dtau<F>(f: F, tau: ModularPoint, step: f64) -> Result<Complex64>
where
    F: Fn(ModularPoint) -> Complex64,
{
    wirtinger_derivative(|w| f(ModularPoint::new(w)), tau.tau(), step)
}

/// Heat operator H_M = 8 pi i M d/dtau + d^2/deps^2.
pub fn heat_apply(
    m: u32,
    g: &SmoothFn2,
    eps: Complex64,
    tau: ModularPoint,
    p: Precision,
) -> Result<Complex64> {
    let dt = dtau(|t| (g.f)(eps, t), tau, p.fd_step)?;
    let dee = g.eps_deriv(2, eps, tau, p)?;
    Ok(Complex64::new(0.0, 8.0 * std::f64::consts::PI * m as f64) * dt + dee)
}

/// Maass raising operator R_k = 2i d/dtau + k/v.
pub fn raise(k: f64, f: &SmoothFn1, tau: ModularPoint, p: Precision) -> Result<Complex64> {
    let dt = dtau(&f.f, tau, p.fd_step)?;
    let val = (f.f)(tau);
    if !val.is_finite() {
        return Err(Error::NonFiniteSample);
    }
    Ok(2.0 * Complex64::i() * dt + k / tau.v() * val)
}

/// Iterated raising R_k^n = R_{k+2(n-1)} o ... o R_k; R_k^0 is the identity.
/// Depth is capped at 4: beyond that the nested differences lose more than
/// half the significant digits.
pub fn raise_iter(k: f64, n: u32, f: &SmoothFn1, tau: ModularPoint, p: Precision) -> Result<Complex64> {
    if n > 4 {
        return Err(Error::StepUnderflow);
    }
    if n == 0 {
        let v = (f.f)(tau);
        if !v.is_finite() {
            return Err(Error::NonFiniteSample);
        }
        return Ok(v);
    }
    // widen the base step with the remaining depth
    let inner_p = Precision {
        fd_step: p.fd_step.powf(1.0 / n as f64),
        ..p
    };
    if n == 1 {
        return raise(k, f, tau, inner_p);
    }
    let inner = SmoothFn1::new(|t| {
        raise_iter(k, n - 1, f, t, p).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    });
    raise(k + 2.0 * (n - 1) as f64, &inner, tau, inner_p)
}

/// Hyperbolic Laplacian Delta_k = -v^2(d^2_u + d^2_v) + i k v (d_u + i d_v),
/// by Richardson-extrapolated central differences.
pub fn laplacian(k: f64, f: &SmoothFn1, tau: ModularPoint, p: Precision) -> Result<Complex64> {
    let at = |du: f64, dv: f64| -> Result<Complex64> {
        let v = (f.f)(ModularPoint::new(tau.tau() + Complex64::new(du, dv)));
        if !v.is_finite() {
            return Err(Error::NonFiniteSample);
        }
        Ok(v)
    };
    let stencil = |h: f64| -> Result<Complex64> {
        let c = at(0.0, 0.0)?;
        let xu = at(h, 0.0)?;
        let xd = at(-h, 0.0)?;
        let yu = at(0.0, h)?;
        let yd = at(0.0, -h)?;
        let duu = (xu - 2.0 * c + xd) / (h * h);
        let dvv = (yu - 2.0 * c + yd) / (h * h);
        let du = (xu - xd) / (2.0 * h);
        let dv = (yu - yd) / (2.0 * h);
        let v = tau.v();
        Ok(-v * v * (duu + dvv) + Complex64::i() * k * v * (du + Complex64::i() * dv))
    };
    let h = p.fd_step.sqrt();
    let d1 = stencil(h)?;
    let d2 = stencil(h / 2.0)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// For heat-annihilated g, the normalized eps-derivatives of g/F^{(0,0)}
/// collapse to raising iterates:
///   delta^{2j}[g/F^{(0,0)}]_0 = (M/pi)^j R_{1/2}^j (g(0;.))
///   delta^{2j+1}[g/F^{(0,0)}]_0 = (M/pi)^j R_{3/2}^j (delta[g]_0)
/// Returns (lhs, rhs, residual); fails if |H_M g| at 0 exceeds 1e-4.
pub fn prop7_check(
    g: &SmoothFn2,
    m: u32,
    j: u32,
    parity: Parity,
    tau: ModularPoint,
    p: Precision,
) -> Result<(Complex64, Complex64, f64)> {
    let h = heat_apply(m, g, Complex64::new(0.0, 0.0), tau, p)?;
    if h.norm() >= 1e-4 {
        return Err(Error::HeatPreconditionFailed { residual: h.norm() });
    }
    let over_f = SmoothFn2 {
        f: Box::new(|eps: Complex64, t: ModularPoint| {
            let gauss = (m as f64 * std::f64::consts::PI * eps * eps / t.v()).exp();
            (g.f)(eps, t) / gauss
        }),
        // division by the gaussian leaves the eps-smoothness class unchanged
        // but introduces explicit anti-holomorphic eps-dependence through v?
        // no: v depends on tau only, so holomorphy in eps is preserved
        holomorphic_eps: g.holomorphic_eps,
    };
    let order = match parity {
        Parity::Even => 2 * j,
        Parity::Odd => 2 * j + 1,
    };
    let lhs = over_f.eps_deriv(order, Complex64::new(0.0, 0.0), tau, p)? / TWO_PI_I.powu(order);
    let scale = (m as f64 / std::f64::consts::PI).powi(j as i32);
    let rhs = match parity {
        Parity::Even => {
            let base = SmoothFn1::new(|t| (g.f)(Complex64::new(0.0, 0.0), t));
            scale * raise_iter(0.5, j, &base, tau, p)?
        }
        Parity::Odd => {
            let base = SmoothFn1::new(|t| {
                g.eps_deriv(1, Complex64::new(0.0, 0.0), t, p)
                    .map(|d| d / TWO_PI_I)
                    .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
            });
            scale * raise_iter(1.5, j, &base, tau, p)?
        }
    };
    let residual = (lhs - rhs).norm() / (1.0 + rhs.norm());
    Ok((lhs, rhs, residual))
}
