//! Laurent data at a pole: the Gaussian factor F^{(s)}, the Laurent
//! coefficients of the quotient and of F^{(s)} times the quotient, and the
//! closed-form convolution linking the two.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::formspec::ThetaQuotientForm;
use crate::numerics::{e2pi, lattice_distance, EllipticPoint, ModularPoint, Precision, TorsionPoint};

const TWO_PI_I: Complex64 = Complex64 { re: 0.0, im: 2.0 * std::f64::consts::PI };

/// Laurent coefficients at a pole s of order n_s: `dtilde[j-1]` is the
/// coefficient of (2 pi i eps)^{-j} in the quotient itself, `d[j-1]` the same
/// for the quotient multiplied by F^{(s)}.
#[derive(Debug, Clone)]
pub struct LaurentData {
    pub s: TorsionPoint,
    pub n_s: u32,
    pub dtilde: Vec<Complex64>,
    pub d: Vec<Complex64>,
    pub tau: ModularPoint,
}

/// F^{(s)}(eps; tau) = e^{M pi eps^2 / v} e(M alpha beta + 2 M alpha eps) q^{M alpha^2}.
pub fn f_s(m: u32, s: TorsionPoint, eps: Complex64, tau: ModularPoint) -> Complex64 {
    let mf = m as f64;
    let a = s.alpha_f64();
    let b = s.beta_f64();
    (mf * std::f64::consts::PI * eps * eps / tau.v()).exp()
        * e2pi(mf * a * b + 2.0 * mf * a * eps)
        * tau.q_pow(mf * a * a)
}

/// n-th eps-derivative of F^{(s)} at eps = 0 in closed form:
/// F = C e^{a eps^2 + b eps} with a = M pi / v, b = 4 pi i M alpha, so
/// the derivative is C n! sum_m a^m b^{n-2m} / (m! (n-2m)!).
pub fn f_deriv_poly(m: u32, s: TorsionPoint, n: u32, tau: ModularPoint) -> Complex64 {
    let mf = m as f64;
    let alpha = s.alpha_f64();
    let beta = s.beta_f64();
    let a = Complex64::new(mf * std::f64::consts::PI / tau.v(), 0.0);
    let b = Complex64::new(0.0, 4.0 * std::f64::consts::PI * mf * alpha);
    let c0 = e2pi(Complex64::new(mf * alpha * beta, 0.0)) * tau.q_pow(mf * alpha * alpha);
    let mut sum = Complex64::new(0.0, 0.0);
    let fact = |k: u32| -> f64 { (1..=k as u64).map(|x| x as f64).product() };
    let mut half = 0;
    while 2 * half <= n {
        let rest = n - 2 * half;
        sum += a.powu(half) * b.powu(rest) / (fact(half) * fact(rest));
        half += 1;
    }
    c0 * fact(n) * sum
}

/// Distance from z_s to the nearest other singularity of the quotient
/// (another pole's translate, or a nonzero lattice translate of s itself).
fn nearest_singularity(form: &ThetaQuotientForm, s: TorsionPoint, tau: ModularPoint) -> f64 {
    let zs = s.z_at(tau);
    let mut best = f64::INFINITY;
    for p in form.poles() {
        let w = zs - p.s.z_at(tau);
        let d = lattice_distance(w, tau);
        if d > 1e-9 {
            best = best.min(d);
        } else {
            // same pole: closest nonzero lattice translate
            best = best.min(1.0_f64.min(tau.tau().norm()).min((tau.tau() - 1.0).norm()));
        }
    }
    best
}

pub fn default_radius(form: &ThetaQuotientForm, s: TorsionPoint, tau: ModularPoint) -> f64 {
    (nearest_singularity(form, s, tau) / 4.0).min(0.1)
}

fn pole_order(form: &ThetaQuotientForm, s: TorsionPoint) -> u32 {
    form.poles()
        .iter()
        .find(|p| p.s == s)
        .map(|p| p.order)
        .expect("s must be a pole of the form")
}

/// Circle moments: coefficient of (2 pi i eps)^{-j} for j = 1..n_s of
/// `integrand(eps)` around 0, via (2 pi i)^j (1/n) sum integrand(e_k) e_k^j.
fn circle_moments<G>(integrand: G, n_s: u32, radius: f64, n: usize) -> Result<Vec<Complex64>>
where
    G: Fn(Complex64) -> Result<Complex64>,
{
    let samples: Vec<(Complex64, Complex64)> = (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let eps = radius * Complex64::new(t.cos(), t.sin());
            integrand(eps).map(|v| (eps, v))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(n_s as usize);
    for j in 1..=n_s {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(eps, v) in &samples {
            acc += v * eps.powu(j);
        }
        out.push(TWO_PI_I.powu(j) * acc / n as f64);
    }
    Ok(out)
}

fn laurent_generic<G>(
    form: &ThetaQuotientForm,
    s: TorsionPoint,
    tau: ModularPoint,
    radius: f64,
    p: Precision,
    with_f: bool,
    integrand_extra: G,
) -> Result<Vec<Complex64>>
where
    G: Fn(Complex64) -> Complex64,
{
    let bound = nearest_singularity(form, s, tau) / 2.0;
    if radius >= bound {
        return Err(Error::RadiusTooLarge { radius, bound });
    }
    let m = form.index_m();
    let n_s = pole_order(form, s);
    let zs = s.z_at(tau);
    let vals = circle_moments(
        |eps| {
            let base = form.eval(EllipticPoint::new(zs + eps), tau, p)?;
            let f = if with_f { f_s(m, s, eps, tau) } else { Complex64::new(1.0, 0.0) };
            Ok(base * f * integrand_extra(eps))
        },
        n_s,
        radius,
        p.contour_samples,
    )?;
    if vals[n_s as usize - 1].norm() < 1e-8 {
        return Err(Error::LeadingCoefficientVanishes);
    }
    Ok(vals)
}

/// Laurent coefficients of the quotient at the pole s, with a chosen radius.
pub fn laurent_tilde_radius(
    form: &ThetaQuotientForm,
    s: TorsionPoint,
    tau: ModularPoint,
    radius: f64,
    p: Precision,
) -> Result<LaurentData> {
    let dtilde = laurent_generic(form, s, tau, radius, p, false, |_| Complex64::new(1.0, 0.0))?;
    Ok(LaurentData { s, n_s: dtilde.len() as u32, dtilde, d: Vec::new(), tau })
}

/// Laurent coefficients of the quotient, radius defaulted to a quarter of
/// the distance to the nearest other singularity (capped at 0.1).
pub fn laurent_tilde(
    form: &ThetaQuotientForm,
    s: TorsionPoint,
    tau: ModularPoint,
    p: Precision,
) -> Result<LaurentData> {
    laurent_tilde_radius(form, s, tau, default_radius(form, s, tau), p)
}

/// Laurent coefficients of F^{(s)} times the quotient.
pub fn laurent_d(
    form: &ThetaQuotientForm,
    s: TorsionPoint,
    tau: ModularPoint,
    p: Precision,
) -> Result<LaurentData> {
    let radius = default_radius(form, s, tau);
    let d = laurent_generic(form, s, tau, radius, p, true, |_| Complex64::new(1.0, 0.0))?;
    let dtilde = laurent_generic(form, s, tau, radius, p, false, |_| Complex64::new(1.0, 0.0))?;
    Ok(LaurentData { s, n_s: d.len() as u32, dtilde, d, tau })
}

/// Convolution form of the D coefficients: multiplying the principal part of
/// the quotient by the entire Taylor expansion of F^{(s)} gives
/// D_j = sum_{lam=j}^{n_s} Dtilde_lam (delta^{lam-j} F^{(s)})(0) / (lam-j)!
/// with delta-normalized derivatives delta^m = (1/2 pi i)^m d^m/d eps^m.
pub fn laurent_d_closed(
    dtilde: &[Complex64],
    m: u32,
    s: TorsionPoint,
    tau: ModularPoint,
) -> Vec<Complex64> {
    let n_s = dtilde.len();
    let fact = |k: u32| -> f64 { (1..=k as u64).map(|x| x as f64).product() };
    (1..=n_s)
        .map(|j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for lam in j..=n_s {
                let k = (lam - j) as u32;
                let delta = f_deriv_poly(m, s, k, tau) / TWO_PI_I.powu(k);
                acc += dtilde[lam - 1] * delta / fact(k);
            }
            acc
        })
        .collect()
}
