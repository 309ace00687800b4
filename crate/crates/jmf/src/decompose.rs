//! Finite/polar splitting of a theta quotient: theta coefficients along the
//! distinguished horizontal paths, three routes to the polar part, and the
//! completed variants built from the Laurent data and the completion kernels.

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};

use crate::completions::{f_m, f_m_hat, r_m_ell, rho, rho_hat, xi, RhoArgs};
use crate::error::{Error, Result};
use crate::formspec::ThetaQuotientForm;
use crate::laurent::{default_radius, f_s, laurent_d, laurent_tilde, LaurentData};
use crate::numerics::{
    cauchy_derivative, contour_integrate, e2pi, lattice_distance, wirtinger_circle, EllipticPoint,
    ModularPoint, Precision, TorsionPoint,
};
use crate::operators::{raise_iter, SmoothFn1};
use crate::qexp::{h_band, Band};
use crate::theta::theta_vector;

const TWO_PI_I: Complex64 = Complex64 { re: 0.0, im: 2.0 * std::f64::consts::PI };
const NAN_C: Complex64 = Complex64 { re: f64::NAN, im: f64::NAN };

/// Paths are rejected rather than deformed when a pole lies this close.
const WALL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffKind {
    Canonical,
    Completed,
}

/// Theta coefficients h_0 .. h_{2M-1} at a fixed tau.
#[derive(Debug, Clone)]
pub struct CoeffVector {
    pub m: u32,
    pub values: Vec<Complex64>,
    pub tau: ModularPoint,
    pub kind: CoeffKind,
}

/// One evaluation of the finite/polar split, with the recombination residual.
#[derive(Debug, Clone, Copy)]
pub struct SplitReport {
    pub finite: Complex64,
    pub polar: Complex64,
    pub total: Complex64,
    pub residual: f64,
}

fn fact(k: u32) -> f64 {
    (1..=k as u64).map(|x| x as f64).product()
}

fn frac(r: Rational64) -> Rational64 {
    r - r.floor()
}

/// q^{-l^2/4M} times the Fourier coefficient of the quotient against e(-l z)
/// along the path from y*tau to y*tau + 1.
fn h_at_height(
    form: &ThetaQuotientForm,
    ell: i64,
    y: f64,
    tau: ModularPoint,
    p: Precision,
) -> Result<Complex64> {
    let mf = form.index_m() as f64;
    let lf = ell as f64;
    let z0 = y * tau.tau();
    let n = p.contour_samples.max(256);
    let integral = contour_integrate(
        |z| {
            form.eval(EllipticPoint::new(z), tau, p)
                .map(|v| v * e2pi(-lf * z))
                .unwrap_or(NAN_C)
        },
        z0,
        z0 + 1.0,
        n,
    )?;
    Ok(tau.q_pow(-lf * lf / (4.0 * mf)) * integral)
}

/// Canonical theta coefficient h_l along the path at height -l v / 2M.
///
/// A pole wall exactly on the path is handled as the principal value: the
/// average of the two adjacent mid-band contours. A wall merely close to the
/// path (within [`WALL_TOL`] but not rationally equal) is an error.
pub fn canonical_h(
    form: &ThetaQuotientForm,
    ell: i64,
    tau: ModularPoint,
    p: Precision,
) -> Result<Complex64> {
    let two_m = 2 * form.index_m() as i64;
    let height = Rational64::new(-ell, two_m);
    let mut on_wall = false;
    let mut gap_up = Rational64::one();
    let mut gap_down = Rational64::one();
    for pole in form.poles() {
        let up = frac(pole.s.alpha() - height);
        if up.is_zero() {
            on_wall = true;
            continue;
        }
        let down = Rational64::one() - up;
        let dist = up.min(down).to_f64().unwrap() * tau.v();
        if dist < WALL_TOL {
            return Err(Error::PathThroughPole);
        }
        gap_up = gap_up.min(up);
        gap_down = gap_down.min(down);
    }
    let y = height.to_f64().unwrap();
    if !on_wall {
        return h_at_height(form, ell, y, tau, p);
    }
    let hu = h_at_height(form, ell, y + gap_up.to_f64().unwrap() / 2.0, tau, p)?;
    let hd = h_at_height(form, ell, y - gap_down.to_f64().unwrap() / 2.0, tau, p)?;
    Ok(0.5 * (hu + hd))
}

/// Independent band-series route to the same coefficient: expand the quotient
/// in the band(s) around the canonical height and evaluate the q-series,
/// averaging the two adjacent bands in the principal-value case.
pub fn band_h_oracle(
    form: &ThetaQuotientForm,
    ell: i64,
    tau: ModularPoint,
    q_orders: i64,
) -> Result<Complex64> {
    let two_m = 2 * form.index_m() as i64;
    let height = Rational64::new(-ell, two_m);
    let mut on_wall = false;
    let mut gap_up = Rational64::one();
    let mut gap_down = Rational64::one();
    for pole in form.poles() {
        let up = frac(pole.s.alpha() - height);
        if up.is_zero() {
            on_wall = true;
            continue;
        }
        gap_up = gap_up.min(up);
        gap_down = gap_down.min(Rational64::one() - up);
    }
    let y = height.to_f64().unwrap();
    let up = gap_up.to_f64().unwrap();
    let down = gap_down.to_f64().unwrap();
    if !on_wall {
        return Ok(h_band(form, ell, Band::new(y - down, y + up), q_orders)?.eval(tau));
    }
    let hi = h_band(form, ell, Band::new(y, y + up), q_orders)?.eval(tau);
    let lo = h_band(form, ell, Band::new(y - down, y), q_orders)?.eval(tau);
    Ok(0.5 * (hi + lo))
}

pub fn canonical_h_vector(
    form: &ThetaQuotientForm,
    tau: ModularPoint,
    p: Precision,
) -> Result<CoeffVector> {
    let m = form.index_m();
    let values = (0..2 * m as i64)
        .map(|ell| canonical_h(form, ell, tau, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoeffVector { m, values, tau, kind: CoeffKind::Canonical })
}

/// sum_l h_l theta_{M,l}(z) for a precomputed coefficient vector.
pub fn finite_from_coeffs(h: &CoeffVector, z: EllipticPoint, p: Precision) -> Result<Complex64> {
    let th = theta_vector(h.m, z, h.tau, p)?;
    Ok(h.values.iter().zip(th.iter()).map(|(a, b)| a * b).sum())
}

/// Finite part phi^F(z) = sum_l h_l theta_{M,l}(z) with canonical h_l.
pub fn finite_part(
    form: &ThetaQuotientForm,
    z: EllipticPoint,
    tau: ModularPoint,
    p: Precision,
) -> Result<Complex64> {
    let h = canonical_h_vector(form, tau, p)?;
    finite_from_coeffs(&h, z, p)
}

/// Polar part as the plain difference phi - phi^F.
pub fn polar_direct(
    form: &ThetaQuotientForm,
    z: EllipticPoint,
    tau: ModularPoint,
    p: Precision,
) -> Result<Complex64> {
    Ok(form.eval(z, tau, p)? - finite_part(form, z, tau, p)?)
}

/// delta^order of a holomorphic function at 0, delta = (1/2 pi i) d/d eps.
fn delta_cauchy<G>(g: &G, order: u32, radius: f64, n: usize) -> Result<Complex64>
where
    G: Fn(Complex64) -> Complex64,
{
    if order == 0 {
        let v = g(Complex64::zero());
        if !v.is_finite() {
            return Err(Error::NonFiniteSample);
        }
        return Ok(v);
    }
    Ok(cauchy_derivative(g, Complex64::zero(), order, radius, n)? / TWO_PI_I.powu(order))
}

/// Same for a merely real-analytic function, via Fourier analysis on circles
/// (the anti-holomorphic admixture is eliminated by radius extrapolation).
fn delta_wirtinger<G>(g: &G, order: u32, p: Precision) -> Result<Complex64>
where
    G: Fn(Complex64) -> Complex64,
{
    if order == 0 {
        let v = g(Complex64::zero());
        if !v.is_finite() {
            return Err(Error::NonFiniteSample);
        }
        return Ok(v);
    }
    let n = p.contour_samples.max(64);
    let w = wirtinger_circle(g, Complex64::zero(), order, 0.05, n, 4)?;
    Ok(w / TWO_PI_I.powu(order))
}

/// Polar part from the Laurent coefficients of the quotient alone:
///
///   phi^P(z) = - sum_s sum_j Dtilde_j/(j-1)! delta^{j-1}[ f^{(M)}_{z_s+eps}(z)
///              - sum_l xi^{(s)}_{M,l}(z_s+eps) theta_{M,l}(z) ]_{eps=0}.
pub fn polar_formula(
    form: &ThetaQuotientForm,
    z: EllipticPoint,
    tau: ModularPoint,
    p: Precision,
) -> Result<Complex64> {
    let m = form.index_m();
    let thetas = theta_vector(m, z, tau, p)?;
    let mut acc = Complex64::zero();
    for pole in form.poles() {
        let ld = laurent_tilde(form, pole.s, tau, p)?;
        let zs = pole.s.z_at(tau);
        let radius = p
            .cauchy_radius
            .min(default_radius(form, pole.s, tau))
            .min(0.5 * lattice_distance(z.z() - zs, tau));
        let g = |eps: Complex64| -> Complex64 {
            let w = zs + eps;
            let mut v = f_m(m, w, z, tau, p).unwrap_or(NAN_C);
            for ell in 0..2 * m as i64 {
                v -= xi(m, ell, pole.s, w, tau) * thetas[ell as usize];
            }
            v
        };
        for j in 1..=ld.n_s {
            let d = delta_cauchy(&g, j - 1, radius, p.contour_samples)?;
            acc -= ld.dtilde[j as usize - 1] / fact(j - 1) * d;
        }
    }
    Ok(acc)
}

/// Raw Laurent moments at a pole translate: coefficient of eps^{-j}, j=1..order.
fn raw_moments(
    form: &ThetaQuotientForm,
    w0: Complex64,
    order: u32,
    radius: f64,
    tau: ModularPoint,
    p: Precision,
) -> Result<Vec<Complex64>> {
    let n = p.contour_samples;
    let mut out = vec![Complex64::zero(); order as usize];
    for k in 0..n {
        let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let eps = radius * Complex64::new(t.cos(), t.sin());
        let v = form.eval(EllipticPoint::new(w0 + eps), tau, p)?;
        for j in 1..=order {
            out[j as usize - 1] += v * eps.powu(j);
        }
    }
    for c in &mut out {
        *c /= n as f64;
    }
    Ok(out)
}

/// Polar part as the residue sum over the pole translates between the
/// canonical path of each Fourier mode and the reference path through the
/// band containing z. Truncated at |l| <= 40.
///
/// Residues at lattice translates z_s + k tau are assembled from the Laurent
/// moments at z_s through the elliptic transformation of the quotient,
///
///   phi(w + k tau) = q^{-M k^2} e(-2 M k w) e(-k (A tau + B)) phi(w),
///   A = sum e_i alpha_i, B = sum e_i beta_i,
///
/// because sampling the thetas that far from the fundamental cell overflows.
pub fn polar_residue_sum(
    form: &ThetaQuotientForm,
    z: EllipticPoint,
    tau: ModularPoint,
    reference: TorsionPoint,
    p: Precision,
) -> Result<Complex64> {
    let m = form.index_m();
    let mf = m as f64;
    let two_m = 2 * m as i64;
    let y_ref = reference.alpha();
    let poles = form.poles();
    let a_sum: Rational64 = form.factors.iter().map(|f| f.shift.alpha() * f.exponent).sum();
    let b_sum: Rational64 = form.factors.iter().map(|f| f.shift.beta() * f.exponent).sum();
    let af = a_sum.to_f64().unwrap();
    let bf = b_sum.to_f64().unwrap();
    let moments: Vec<Vec<Complex64>> = poles
        .iter()
        .map(|pole| {
            let radius = default_radius(form, pole.s, tau).min(0.02);
            raw_moments(form, pole.s.z_at(tau), pole.order, radius, tau, p)
        })
        .collect::<Result<_>>()?;
    let lmax = 40i64;
    let mut total = Complex64::zero();
    let mut peak = 0.0f64;
    let mut tail = 0.0f64;
    for ell in -lmax..=lmax {
        let lf = ell as f64;
        let pl = Rational64::new(-ell, two_m);
        if pl == y_ref {
            continue;
        }
        let (lo, hi) = if y_ref < pl { (y_ref, pl) } else { (pl, y_ref) };
        let sign = if y_ref < pl { 1.0 } else { -1.0 };
        let mut res = Complex64::zero();
        for (pi, pole) in poles.iter().enumerate() {
            let a = pole.s.alpha();
            let alpha = pole.s.alpha_f64();
            let beta = pole.s.beta_f64();
            let kmin = (lo - a).ceil().to_integer();
            let kmax = (hi - a).floor().to_integer();
            for k in kmin..=kmax {
                let wall = a + Rational64::from_integer(k);
                let weight = if wall == y_ref {
                    return Err(Error::PathThroughPole);
                } else if wall == pl {
                    0.5
                } else {
                    1.0
                };
                // phi(z_s + k tau + eps) e(-l (z_s + k tau + eps))
                //   = kfac e(-(2Mk + l) eps) phi(z_s + eps)
                let kf = k as f64;
                let tau_exp = -mf * kf * kf - 2.0 * mf * kf * alpha - kf * af - lf * (alpha + kf);
                let phase = -2.0 * mf * kf * beta - kf * bf - lf * beta;
                let kfac = tau.q_pow(tau_exp) * e2pi(Complex64::new(phase, 0.0));
                let c = -TWO_PI_I * (2.0 * mf * kf + lf);
                let mut r = Complex64::zero();
                for j in 1..=pole.order {
                    r += moments[pi][j as usize - 1] * c.powu(j - 1) / fact(j - 1);
                }
                res += weight * kfac * r;
            }
        }
        let term = e2pi(lf * z.z()) * sign * TWO_PI_I * res;
        total += term;
        peak = peak.max(term.norm());
        if ell.abs() >= lmax - 2 {
            tail = tail.max(term.norm());
        }
    }
    let tol = 1e-9 * (1.0 + peak);
    if tail > tol {
        return Err(Error::TruncationInsufficient { last: tail, tol });
    }
    Ok(total)
}

/// Finite/polar split of one evaluation, with the polar part from the
/// Laurent-data route so the residual is a genuine consistency check.
pub fn split(
    form: &ThetaQuotientForm,
    z: EllipticPoint,
    tau: ModularPoint,
    p: Precision,
) -> Result<SplitReport> {
    let total = form.eval(z, tau, p)?;
    let finite = finite_part(form, z, tau, p)?;
    let polar = polar_formula(form, z, tau, p)?;
    Ok(SplitReport { finite, polar, total, residual: (finite + polar - total).norm() })
}

/// Completed polar part, built from f-hat and the F-weighted Laurent data:
///
///   phi-hat^P(z) = - sum_s sum_j D_j/(j-1)!
///                  delta^{j-1}[ f-hat^{(M)}_{z_s+eps}(z) / F^{(s)}(eps) ]_0.
pub fn completed_polar(
    form: &ThetaQuotientForm,
    z: EllipticPoint,
    tau: ModularPoint,
    p: Precision,
) -> Result<Complex64> {
    let m = form.index_m();
    let mut acc = Complex64::zero();
    for pole in form.poles() {
        let ld = laurent_d(form, pole.s, tau, p)?;
        let zs = pole.s.z_at(tau);
        let g = |eps: Complex64| -> Complex64 {
            f_m_hat(m, zs + eps, z, tau, p).unwrap_or(NAN_C) / f_s(m, pole.s, eps, tau)
        };
        for j in 1..=ld.n_s {
            let d = delta_wirtinger(&g, j - 1, p)?;
            acc -= ld.d[j as usize - 1] / fact(j - 1) * d;
        }
    }
    Ok(acc)
}

/// The correction sum_j D_j/(j-1)! delta^{j-1}[((1/2) R_{M,l} - xi)/F]_0 that
/// turns h_l into its completion at one pole.
pub fn completion_correction(
    form: &ThetaQuotientForm,
    ld: &LaurentData,
    ell: i64,
    tau: ModularPoint,
    p: Precision,
) -> Result<Complex64> {
    let m = form.index_m();
    let s = ld.s;
    let zs = s.z_at(tau);
    let g = |eps: Complex64| -> Complex64 {
        let w = zs + eps;
        let kern = 0.5 * r_m_ell(m, ell, w, tau, p).unwrap_or(NAN_C) - xi(m, ell, s, w, tau);
        kern / f_s(m, s, eps, tau)
    };
    let mut acc = Complex64::zero();
    for j in 1..=ld.n_s {
        let d = delta_wirtinger(&g, j - 1, p)?;
        acc += ld.d[j as usize - 1] / fact(j - 1) * d;
    }
    Ok(acc)
}

/// Completed theta coefficient h-hat_l = h_l - sum_s (completion correction).
pub fn completed_h(
    form: &ThetaQuotientForm,
    ell: i64,
    tau: ModularPoint,
    p: Precision,
) -> Result<Complex64> {
    let mut acc = canonical_h(form, ell, tau, p)?;
    for pole in form.poles() {
        let ld = laurent_d(form, pole.s, tau, p)?;
        acc -= completion_correction(form, &ld, ell, tau, p)?;
    }
    Ok(acc)
}

pub fn completed_h_vector(
    form: &ThetaQuotientForm,
    tau: ModularPoint,
    p: Precision,
) -> Result<CoeffVector> {
    let m = form.index_m();
    let base = canonical_h_vector(form, tau, p)?;
    let lds = form
        .poles()
        .iter()
        .map(|pole| laurent_d(form, pole.s, tau, p))
        .collect::<Result<Vec<_>>>()?;
    let mut values = base.values;
    for (ell, v) in values.iter_mut().enumerate() {
        for ld in &lds {
            *v -= completion_correction(form, ld, ell as i64, tau, p)?;
        }
    }
    Ok(CoeffVector { m, values, tau, kind: CoeffKind::Completed })
}

/// Completed finite part sum_l h-hat_l theta_{M,l}(z).
pub fn completed_finite(
    form: &ThetaQuotientForm,
    z: EllipticPoint,
    tau: ModularPoint,
    p: Precision,
) -> Result<Complex64> {
    let h = completed_h_vector(form, tau, p)?;
    finite_from_coeffs(&h, z, p)
}

/// Raising depths reachable at a pole of order n_s: odd-index coefficients
/// D_{2h+1} need 2h+1 <= n_s, even-index D_{2h+2} need 2h+2 <= n_s.
pub fn raising_depths(n_s: u32) -> (Vec<u32>, Vec<u32>) {
    let odd = (0..).take_while(|h| 2 * h + 1 <= n_s).collect();
    let even = (0..).take_while(|h| 2 * h + 2 <= n_s).collect();
    (odd, even)
}

/// h-hat_l through iterated raising of the rho functions instead of eps
/// stencils on the kernel:
///
///   h_l + sum_s [ sum_h D_{2h+1}/(2h)! (M/pi)^h R^h_{1/2}( rho(0) )
///               + sum_h D_{2h+2}/(2h+1)! (M/pi)^h R^h_{3/2}( delta[rho]_0 ) ]
///       - (the same two sums with rho-hat).
pub fn h_hat_raising_form(
    form: &ThetaQuotientForm,
    ell: i64,
    tau: ModularPoint,
    p: Precision,
) -> Result<Complex64> {
    let m = form.index_m();
    let mf = m as f64;
    let mut acc = canonical_h(form, ell, tau, p)?;
    for pole in form.poles() {
        let ld = laurent_d(form, pole.s, tau, p)?;
        let s = pole.s;
        let (odd, even) = raising_depths(ld.n_s);
        for hat in [false, true] {
            let sgn = if hat { -1.0 } else { 1.0 };
            let rho_at = |u: Complex64, t: ModularPoint| -> Complex64 {
                let args = RhoArgs::new(m, ell, s, u);
                let r = if hat { rho_hat(&args, t, p) } else { rho(&args, t, p) };
                r.unwrap_or(NAN_C)
            };
            for &h in &odd {
                let base = SmoothFn1::new(|t| rho_at(Complex64::zero(), t));
                let val = raise_iter(0.5, h, &base, tau, p)?;
                acc += sgn
                    * ld.d[2 * h as usize]
                    * (mf / std::f64::consts::PI).powi(h as i32)
                    * val
                    / fact(2 * h);
            }
            for &h in &even {
                let base = SmoothFn1::new(|t| {
                    cauchy_derivative(|u| rho_at(u, t), Complex64::zero(), 1, 0.02, 64)
                        .map(|d| d / TWO_PI_I)
                        .unwrap_or(NAN_C)
                });
                let val = raise_iter(1.5, h, &base, tau, p)?;
                acc += sgn
                    * ld.d[2 * h as usize + 1]
                    * (mf / std::f64::consts::PI).powi(h as i32)
                    * val
                    / fact(2 * h + 1);
            }
        }
    }
    Ok(acc)
}
