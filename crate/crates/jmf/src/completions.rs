//! Non-holomorphic and mock building blocks: the real-analytic functions E and
//! R, the theta-coefficient completion kernels R_{M,l} and xi, the two-variable
//! mock Jacobi form f^{(M)} with its completion, the multivariable Appell
//! functions mu_n with shifts and completions, and the rho functions built from
//! them.

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{Signed, Zero};
use libm::{erf, erfc};

use crate::error::{Error, Result};
use crate::numerics::{e2pi, lattice_distance, EllipticPoint, ModularPoint, Precision, TorsionPoint};
use crate::theta::{theta, theta_level, ThetaLevelIndex};

/// Minimal distance from the lattice below which denominators are considered
/// singular.
pub const POLE_THRESHOLD: f64 = 1e-6;

const PI: f64 = std::f64::consts::PI;

/// E(t) = 2 int_0^t exp(-pi u^2) du = erf(sqrt(pi) t).
pub fn e_fn(t: f64) -> f64 {
    erf(PI.sqrt() * t)
}

/// sgn(nu) - E((nu + a) sqrt(2v)) computed through erfc to avoid cancellation
/// in the tails. nu is a half-integer, never zero.
fn sgn_minus_e(nu: f64, a: f64, v: f64) -> f64 {
    let t = (nu + a) * (2.0 * v).sqrt() * PI.sqrt();
    if nu > 0.0 {
        erfc(t)
    } else {
        -erfc(-t)
    }
}

/// Zwegers' real-analytic R-function:
/// R(u;tau) = sum_{nu in 1/2+Z} {sgn(nu) - E((nu + Im u / v) sqrt(2v))}
///            (-1)^{nu-1/2} q^{-nu^2/2} e(-nu u).
///
/// Every term is bounded by exp(-pi v ((nu + a)^2 + a^2)) with a = Im u / v,
/// so the sum is numerically benign for any argument.
pub fn r_fn(u: Complex64, tau: ModularPoint, p: Precision) -> Result<Complex64> {
    let v = tau.v();
    let a = u.im / v;
    // |term| <= exp(-pi v (nu + a)^2): a Gaussian centred at nu = -a
    let l = (1.0 / p.target_tol).ln().max(1.0);
    let n_max = ((a.abs() + (l / (PI * v)).sqrt()).ceil() as i64 + 3)
        .min(p.series_terms as i64);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut last = 0.0_f64;
    for k in 0..=n_max {
        // sign is (-1)^(nu - 1/2): (-1)^k for nu = k+1/2, (-1)^(k+1) for
        // nu = -(k+1/2)
        for (nu, sign) in [
            (k as f64 + 0.5, if k % 2 == 0 { 1.0 } else { -1.0 }),
            (-(k as f64) - 0.5, if k % 2 == 0 { -1.0 } else { 1.0 }),
        ] {
            let bracket = sgn_minus_e(nu, a, v);
            if bracket == 0.0 {
                continue; // erfc underflow: the true term is far below tolerance
            }
            // assemble via log-magnitude so the erfc tail and the q-power
            // never meet as raw floats
            let log_mag = bracket.abs().ln() + PI * nu * nu * v + 2.0 * PI * nu * u.im;
            let phase = -PI * nu * nu * tau.u() - 2.0 * PI * nu * u.re;
            let term = sign
                * bracket.signum()
                * log_mag.exp()
                * Complex64::new(phase.cos(), phase.sin());
            if !term.is_finite() {
                return Err(Error::NonFiniteSample);
            }
            acc += term;
            if k == n_max {
                last = last.max(term.norm());
            }
        }
    }
    if last > p.target_tol.max(1e-12) * 10.0 {
        return Err(Error::TruncationInsufficient { last, tol: p.target_tol });
    }
    Ok(acc)
}

/// R_{M,l}(w;tau) = -i e(w(M-l)) q^{-(l-M)^2/4M} R(2Mw - 1/2 + tau(l-M); 2M tau).
pub fn r_m_ell(m: u32, ell: i64, w: Complex64, tau: ModularPoint, p: Precision) -> Result<Complex64> {
    let mf = m as f64;
    let lf = ell as f64;
    let arg = 2.0 * mf * w - 0.5 + tau.tau() * (lf - mf);
    let inner_tau = ModularPoint::new(2.0 * mf * tau.tau());
    let r = r_fn(arg, inner_tau, p)?;
    Ok(-Complex64::i()
        * e2pi(w * (mf - lf))
        * tau.q_pow(-(lf - mf) * (lf - mf) / (4.0 * mf))
        * r)
}

/// xi^{(alpha,beta)}_{M,l}(u;tau): finite sum over r = l mod 2M where
/// sgn(r+1/2) and sgn(r+2M alpha) disagree, with weight half their difference
/// and the convention sgn(0) = 0.
pub fn xi(
    m: u32,
    ell: i64,
    s: TorsionPoint,
    u: Complex64,
    tau: ModularPoint,
) -> Complex64 {
    let two_m = 2 * m as i64;
    let two_m_alpha = s.alpha() * Rational64::from_integer(two_m);
    // candidate r lie between -2M alpha and -1/2 (inclusive of sgn(0) hits)
    let bound_a = -two_m_alpha.floor().to_integer() - 2;
    let bound_b = -two_m_alpha.ceil().to_integer() + 2;
    let lo = bound_a.min(bound_b).min(-1) - two_m;
    let hi = bound_a.max(bound_b).max(0) + two_m;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut r = ell.rem_euclid(two_m) + (lo.div_euclid(two_m)) * two_m;
    while r <= hi {
        if r >= lo {
            let s1 = sgn_half(r); // sgn(r + 1/2), never zero
            let arg = Rational64::from_integer(r) + two_m_alpha;
            let s2 = sgn_rational(arg);
            if s1 != s2 {
                let weight = (s1 - s2) as f64 / 2.0;
                let rf = r as f64;
                acc += weight * tau.q_pow(-rf * rf / (4.0 * m as f64)) * e2pi(-rf * u);
            }
        }
        r += two_m;
    }
    acc
}

fn sgn_half(r: i64) -> i32 {
    if 2 * r + 1 > 0 {
        1
    } else {
        -1
    }
}

fn sgn_rational(x: Rational64) -> i32 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

/// f^{(M)}_w(z;tau) = sum_{a in Z} q^{M a^2} e(2 M a z) / (1 - e(z-w) q^a).
///
/// The factor (-1)^{2Ma} of the half-integral-index case is identically 1 for
/// the integral M handled here and is therefore omitted from the sum.
pub fn f_m(
    m: u32,
    w: Complex64,
    z: EllipticPoint,
    tau: ModularPoint,
    p: Precision,
) -> Result<Complex64> {
    let dist = lattice_distance(z.z() - w, tau);
    if dist < POLE_THRESHOLD {
        return Err(Error::PoleCollision { dist });
    }
    let mf = m as f64;
    let v = tau.v();
    let y = z.y();
    let yw = w.im;
    let l = (1.0 / p.target_tol).ln().max(1.0);
    let lin = (2.0 * mf * y.abs() + v + (y - yw).abs() + 1.0) / (mf * v);
    let n_max = ((lin + (lin * lin + l / (PI * mf * v)).sqrt()).ceil() as i64 + 3)
        .min(p.series_terms as i64);
    let zeta_ratio = e2pi(z.z() - w);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut last = 0.0_f64;
    for a in -n_max..=n_max {
        let af = a as f64;
        let denom = 1.0 - zeta_ratio * tau.q_pow(af);
        let term = tau.q_pow(mf * af * af) * e2pi(2.0 * mf * af * z.z()) / denom;
        if !term.is_finite() {
            return Err(Error::NonFiniteSample);
        }
        acc += term;
        if a.abs() == n_max {
            last = last.max(term.norm());
        }
    }
    if last > p.target_tol.max(1e-12) * 10.0 {
        return Err(Error::TruncationInsufficient { last, tol: p.target_tol });
    }
    Ok(acc)
}

/// Completion f-hat^{(M)}_w = f^{(M)}_w - (1/2) sum_l R_{M,l}(w) theta_{M,l}(z).
pub fn f_m_hat(
    m: u32,
    w: Complex64,
    z: EllipticPoint,
    tau: ModularPoint,
    p: Precision,
) -> Result<Complex64> {
    let mut acc = f_m(m, w, z, tau, p)?;
    for ell in 0..2 * m as i64 {
        let r = r_m_ell(m, ell, w, tau, p)?;
        let th = theta_level(ThetaLevelIndex::new(m, ell), z, tau, p)?;
        acc -= 0.5 * r * th;
    }
    Ok(acc)
}

/// Arguments of the multivariable Appell function mu_n and its shifts.
#[derive(Debug, Clone)]
pub struct AppellArgs {
    pub n: u32,
    pub u: Complex64,
    pub v_vec: Vec<Complex64>,
    pub shift_ell: i64,
}

impl AppellArgs {
    pub fn new(n: u32, u: Complex64, v_vec: Vec<Complex64>, shift_ell: i64) -> Self {
        assert!(n > 0);
        assert_eq!(v_vec.len(), n as usize);
        // canonical shifts are 0..n, but the raw representatives -n..0 occur
        // inside the rho functions (the uncompleted mu is not periodic in the
        // shift, so the representative matters there)
        assert!((-(n as i64)..n as i64).contains(&shift_ell));
        Self { n, u, v_vec, shift_ell }
    }

    fn v_sum(&self) -> Complex64 {
        self.v_vec.iter().sum()
    }
}

fn check_appell_lattice(u: Complex64, v_vec: &[Complex64], tau: ModularPoint) -> Result<()> {
    let du = lattice_distance(u, tau);
    if du < POLE_THRESHOLD {
        return Err(Error::PoleCollision { dist: du });
    }
    for &vj in v_vec {
        let d = lattice_distance(vj, tau);
        if d < POLE_THRESHOLD {
            return Err(Error::PoleCollision { dist: d });
        }
    }
    Ok(())
}

/// The bare lattice sum of mu_n, without the e^{pi i u} / prod theta(v_j)
/// prefactor: sum over k in Z^n of
/// (-1)^{|k|} q^{||k||^2/2 + |k|/2} e(k.v) / (1 - e(u) q^{|k|}).
fn mu_lattice_sum(
    n: u32,
    u: Complex64,
    v_vec: &[Complex64],
    tau: ModularPoint,
    p: Precision,
) -> Result<Complex64> {
    let v = tau.v();
    let l = (1.0 / p.target_tol).ln().max(1.0) + 5.0;
    let max_imv = v_vec.iter().map(|w| w.im.abs()).fold(0.0, f64::max);
    let lin = (n as f64 * max_imv + u.im.abs() + v) / v + 1.0;
    let k_max = ((lin + (l / (PI * v)).sqrt()).ceil() as i64 + 3).min(40);
    let eu = e2pi(u);
    let dim = n as usize;
    let mut idx = vec![-k_max; dim];
    let mut acc = Complex64::new(0.0, 0.0);
    loop {
        let ksum: i64 = idx.iter().sum();
        let ksq: i64 = idx.iter().map(|k| k * k).sum();
        let kdotv: Complex64 = idx
            .iter()
            .zip(v_vec)
            .map(|(&k, &vj)| k as f64 * vj)
            .sum();
        let sign = if ksum.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let denom = 1.0 - eu * tau.q_pow(ksum as f64);
        let term = sign * tau.q_pow(ksq as f64 / 2.0 + ksum as f64 / 2.0) * e2pi(kdotv) / denom;
        if !term.is_finite() {
            return Err(Error::NonFiniteSample);
        }
        acc += term;
        // odometer over the box
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] <= k_max {
                break;
            }
            idx[d] = -k_max;
            d += 1;
            if d == dim {
                return Ok(acc);
            }
        }
    }
}

/// Multivariable Appell function mu_n(u, v; tau).
pub fn mu(args: &AppellArgs, tau: ModularPoint, p: Precision) -> Result<Complex64> {
    check_appell_lattice(args.u, &args.v_vec, tau)?;
    let s = mu_lattice_sum(args.n, args.u, &args.v_vec, tau, p)?;
    let mut denom = Complex64::new(1.0, 0.0);
    for &vj in &args.v_vec {
        denom *= theta(EllipticPoint::new(vj), tau, p)?;
    }
    Ok((Complex64::new(0.0, PI) * args.u).exp() / denom * s)
}

/// Prefactor of the shift: mu_{n,l} = pref * mu_n(u + l tau, v; tau) with
/// pref = (-1)^l q^{-l^2/2n} e(-(l/n)(u - |v|)).
fn shift_prefactor(args: &AppellArgs, tau: ModularPoint) -> Complex64 {
    let n = args.n as f64;
    let l = args.shift_ell as f64;
    let sign = if args.shift_ell % 2 == 0 { 1.0 } else { -1.0 };
    sign * tau.q_pow(-l * l / (2.0 * n)) * e2pi(-(l / n) * (args.u - args.v_sum()))
}

/// Shifted multivariable Appell function mu_{n,l}(u, v; tau).
pub fn mu_shift(args: &AppellArgs, tau: ModularPoint, p: Precision) -> Result<Complex64> {
    let shifted = AppellArgs::new(
        args.n,
        args.u + args.shift_ell as f64 * tau.tau(),
        args.v_vec.clone(),
        0,
    );
    Ok(shift_prefactor(args, tau) * mu(&shifted, tau, p)?)
}

/// Completion of the shifted Appell function.
///
/// Defined by conjugating the l = 0 completion with the shift prefactor:
/// mu-hat_{n,l} = pref_l * [ mu_n(u + l tau, v) - (i/2) R(u + l tau - |v| - (n+1)/2; n tau) ].
/// For l = 0 this is mu_{n,0} - (i/2) R(u - |v| - (n+1)/2; n tau). The
/// transformation laws of the completed vector are verified numerically in the
/// verify module.
pub fn mu_hat(args: &AppellArgs, tau: ModularPoint, p: Precision) -> Result<Complex64> {
    mu_hat_impl(args, tau, p, 1.0)
}

/// Test hook: same as [`mu_hat`] but with the R-term scaled by `r_sign`.
/// Used as a negative control (a corrupted completion must break the modular
/// transformation laws).
pub fn mu_hat_corrupted(
    args: &AppellArgs,
    tau: ModularPoint,
    p: Precision,
    r_sign: f64,
) -> Result<Complex64> {
    mu_hat_impl(args, tau, p, r_sign)
}

fn mu_hat_impl(args: &AppellArgs, tau: ModularPoint, p: Precision, r_sign: f64) -> Result<Complex64> {
    let n = args.n as f64;
    let u_shifted = args.u + args.shift_ell as f64 * tau.tau();
    let shifted = AppellArgs::new(args.n, u_shifted, args.v_vec.clone(), 0);
    let mu_val = mu(&shifted, tau, p)?;
    let n_tau = ModularPoint::new(n * tau.tau());
    let r_arg = u_shifted - args.v_sum() - (n + 1.0) / 2.0;
    let r_val = r_fn(r_arg, n_tau, p)?;
    Ok(shift_prefactor(args, tau) * (mu_val - r_sign * Complex64::i() / 2.0 * r_val))
}

/// Arguments of the rho functions of a pole s.
#[derive(Debug, Clone)]
pub struct RhoArgs {
    pub m: u32,
    pub ell: i64,
    pub s: TorsionPoint,
    pub u: Complex64,
}

impl RhoArgs {
    pub fn new(m: u32, ell: i64, s: TorsionPoint, u: Complex64) -> Self {
        assert!(m > 0);
        Self { m, ell: ell.rem_euclid(2 * m as i64), s, u }
    }

    /// Alternating vector (-1/2, 1/2, ..., -1/2, 1/2) of length 2M.
    fn v_vec(&self) -> Vec<Complex64> {
        (0..2 * self.m)
            .map(|j| Complex64::new(if j % 2 == 0 { -0.5 } else { 0.5 }, 0.0))
            .collect()
    }

    /// w = v + (tau/2, 0, ..., 0), used for the s = (0,0) variant.
    fn w_vec(&self, tau: ModularPoint) -> Vec<Complex64> {
        let mut v = self.v_vec();
        v[0] += tau.tau() / 2.0;
        v
    }

    /// Raw shift l - M with l in [0, 2M), giving l - M in [-M, M).
    fn appell_shift(&self) -> i64 {
        self.ell - self.m as i64
    }
}

/// Phase and q-power in front of the s != (0,0) rho functions.
fn rho_prefactor(args: &RhoArgs, tau: ModularPoint) -> Complex64 {
    let mf = args.m as f64;
    let alpha = args.s.alpha_f64();
    let beta = args.s.beta_f64();
    e2pi(Complex64::new(-mf * alpha * beta, 0.0) - 2.0 * mf * alpha * args.u)
        * tau.q_pow(-mf * alpha * alpha)
}

/// rho^{(s)}_{M,l}(u;tau).
pub fn rho(args: &RhoArgs, tau: ModularPoint, p: Precision) -> Result<Complex64> {
    let two_m = 2 * args.m;
    if args.s.is_zero() {
        let ap = AppellArgs::new(
            two_m,
            2.0 * args.m as f64 * args.u + tau.tau() / 2.0,
            args.w_vec(tau),
            args.appell_shift(),
        );
        let m_val = mu_shift(&ap, tau, p)?;
        Ok(m_val + xi(args.m, args.ell, args.s, args.u, tau))
    } else {
        let z_s = args.s.z_at(tau);
        let ap = AppellArgs::new(
            two_m,
            2.0 * args.m as f64 * (args.u + z_s),
            args.v_vec(),
            args.appell_shift(),
        );
        let m_val = mu_shift(&ap, tau, p)?;
        let xi_val = xi(args.m, args.ell, args.s, args.u + z_s, tau);
        Ok(rho_prefactor(args, tau) * (m_val + xi_val))
    }
}

/// Completed rho-hat^{(s)}_{M,l}(u;tau), defined through the completion
/// kernel of the theta-coefficient theory:
///
///   rho-hat = rho + e(-M a b - 2M a u) q^{-M a^2}
///             ((1/2) R_{M,l}(u + z_s) - xi^{(s)}_{M,l}(u + z_s)).
///
/// For even l this agrees with the shifted-Appell completion
/// pref * mu-hat_{2M, l-M}; for odd l the two differ by a sign in the
/// R-term, and this form is the one consistent with the completed
/// finite/polar decomposition.
pub fn rho_hat(args: &RhoArgs, tau: ModularPoint, p: Precision) -> Result<Complex64> {
    let base = rho(args, tau, p)?;
    let w = args.u + args.s.z_at(tau);
    let kernel = 0.5 * r_m_ell(args.m, args.ell, w, tau, p)? - xi(args.m, args.ell, args.s, w, tau);
    let pref = if args.s.is_zero() {
        Complex64::new(1.0, 0.0)
    } else {
        rho_prefactor(args, tau)
    };
    Ok(base + pref * kernel)
}

/// Shifted-Appell form of the completion: pref * mu-hat_{2M, l-M}. Used to
/// cross-check [`rho_hat`] (they coincide for even l).
pub fn rho_hat_appell(args: &RhoArgs, tau: ModularPoint, p: Precision) -> Result<Complex64> {
    let two_m = 2 * args.m;
    if args.s.is_zero() {
        let ap = AppellArgs::new(
            two_m,
            2.0 * args.m as f64 * args.u + tau.tau() / 2.0,
            args.w_vec(tau),
            args.appell_shift(),
        );
        mu_hat(&ap, tau, p)
    } else {
        let z_s = args.s.z_at(tau);
        let ap = AppellArgs::new(
            two_m,
            2.0 * args.m as f64 * (args.u + z_s),
            args.v_vec(),
            args.appell_shift(),
        );
        Ok(rho_prefactor(args, tau) * mu_hat(&ap, tau, p)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mp(re: f64, im: f64) -> ModularPoint {
        ModularPoint::new(c(re, im))
    }

    /// Independent oracle for E by adaptive Simpson quadrature of the
    /// defining integral.
    fn e_oracle(t: f64) -> f64 {
        fn simpson(a: f64, b: f64, n: usize) -> f64 {
            let h = (b - a) / n as f64;
            let f = |u: f64| (-PI * u * u).exp();
            let mut s = f(a) + f(b);
            for k in 1..n {
                s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        }
        // integrand is below 1e-50 past |u| = 6; cap there so Simpson's h
        // stays small
        let t_eff = t.abs().min(6.0) * t.signum();
        2.0 * simpson(0.0, t_eff, 4000)
    }

    /// 1 - E(t) = 2 int_t^inf exp(-pi u^2) du by quadrature of the tail, so
    /// large t loses no precision to cancellation.
    fn e_tail_oracle(t: f64) -> f64 {
        fn simpson(a: f64, b: f64, n: usize) -> f64 {
            let h = (b - a) / n as f64;
            let f = |u: f64| (-PI * u * u).exp();
            let mut s = f(a) + f(b);
            for k in 1..n {
                s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        }
        2.0 * simpson(t, t.max(0.0) + 7.0, 4000)
    }

    #[test]
    fn e_at_zero_odd_and_quadrature() {
        assert_eq!(e_fn(0.0), 0.0);
        assert!((e_fn(-0.7) + e_fn(0.7)).abs() < 1e-15);
        assert!((e_fn(1.0) - e_oracle(1.0)).abs() < 1e-12);
        assert!(e_fn(5.0) <= 1.0 && e_fn(5.0) > 0.999);
    }

    /// Brute-force R oracle: direct summation with the quadrature-based E.
    fn r_oracle(u: Complex64, tau: Complex64) -> Complex64 {
        let v = tau.im;
        let a = u.im / v;
        let mut acc = Complex64::new(0.0, 0.0);
        for m in -8..8i64 {
            let nu = m as f64 + 0.5;
            // sgn(nu) - E(t) = sgn(nu) * (1 - sgn(nu) E(t)) = sgn(nu) tail(sgn(nu) t)
            let t = (nu + a) * (2.0 * v).sqrt();
            let bracket = nu.signum() * e_tail_oracle(nu.signum() * t);
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            acc += bracket
                * sign
                * e2pi(-nu * nu / 2.0 * tau)
                * e2pi(-nu * u);
        }
        acc
    }

    #[test]
    fn r_value_against_oracle() {
        let p = Precision::default();
        let tau = mp(0.0, 1.0);
        let val = r_fn(c(0.1, 0.0), tau, p).unwrap();
        let oracle = r_oracle(c(0.1, 0.0), c(0.0, 1.0));
        assert!((val - oracle).norm() < 1e-10);
    }

    #[test]
    fn r_shift_by_one_negates() {
        let p = Precision::default();
        let tau = mp(0.0, 1.0);
        let u = c(0.1, 0.05);
        let a = r_fn(u + 1.0, tau, p).unwrap();
        let b = r_fn(u, tau, p).unwrap();
        assert!((a + b).norm() < 1e-11);
    }

    #[test]
    fn r_is_even() {
        let p = Precision::default();
        let tau = mp(0.0, 2.0);
        let u = c(0.0, 0.2);
        let a = r_fn(-u, tau, p).unwrap();
        let b = r_fn(u, tau, p).unwrap();
        assert!((a - b).norm() < 1e-11);
    }

    #[test]
    fn r_m_ell_recomposition() {
        // output equals the displayed phase x power x R product
        let p = Precision::default();
        let tau = mp(0.0, 1.0);
        let w = c(0.1, 0.0);
        let (m, ell) = (1u32, 0i64);
        let got = r_m_ell(m, ell, w, tau, p).unwrap();
        let arg = 2.0 * w - 0.5 + tau.tau() * (0.0 - 1.0);
        let expected = -Complex64::i()
            * e2pi(w * 1.0)
            * tau.q_pow(-0.25)
            * r_fn(arg, mp(0.0, 2.0), p).unwrap();
        assert!((got - expected).norm() < 1e-12);
    }

    #[test]
    fn r_m_ell_value_from_oracle() {
        let p = Precision::default();
        let tau = mp(0.0, 1.0);
        let w = c(0.2, 0.1);
        let got = r_m_ell(1, 1, w, tau, p).unwrap();
        let arg = 2.0 * w - 0.5;
        let expected = -Complex64::i() * r_oracle(arg, c(0.0, 2.0));
        assert!((got - expected).norm() < 1e-9);
    }

    #[test]
    fn xi_vanishes_for_small_alpha() {
        let tau = mp(0.0, 1.0);
        let s = TorsionPoint::from_ints(1, 8, 1, 3);
        for ell in 0..2 {
            let v = xi(1, ell, s, c(0.3, 0.1), tau);
            assert_eq!(v, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn xi_single_term_alpha_one() {
        // M=1, alpha=1, l=1: the only contributing term is r = -1
        let tau = mp(0.0, 1.0);
        let u = c(0.17, 0.03);
        let s = TorsionPoint::from_ints(1, 1, 0, 1);
        let got = xi(1, 1, s, u, tau);
        let expected = -tau.q_pow(-0.25) * e2pi(u);
        assert!((got - expected).norm() < 1e-13);
    }

    #[test]
    fn xi_half_weight_at_sgn_zero() {
        // M=1, alpha=1/2, l=1: r = -1 hits sgn(0)
        let tau = mp(0.0, 1.0);
        let u = c(0.17, 0.03);
        let s = TorsionPoint::from_ints(1, 2, 0, 1);
        let got = xi(1, 1, s, u, tau);
        let expected = -0.5 * tau.q_pow(-0.25) * e2pi(u);
        assert!((got - expected).norm() < 1e-13);
    }

    #[test]
    fn f_m_bounded_near_pole() {
        let p = Precision::default();
        let tau = mp(0.0, 1.0);
        let w = c(0.3, 0.0);
        let mut prev = 0.0;
        for k in 1..=3 {
            let z = w + c(10.0_f64.powi(-k), 0.0);
            let f = f_m(1, w, EllipticPoint::new(z), tau, p).unwrap();
            let sing = 1.0 / (1.0 - e2pi(z - w));
            let diff = (f - sing).norm();
            assert!(diff < 10.0, "unbounded remainder: {diff}");
            prev = diff;
        }
        let _ = prev;
    }

    #[test]
    fn f_m_direct_sum_oracle() {
        let p = Precision::default();
        let tau = mp(0.0, 1.0);
        let w = c(0.3, 0.0);
        let z = c(0.1, 0.4);
        let got = f_m(1, w, EllipticPoint::new(z), tau, p).unwrap();
        let mut oracle = Complex64::new(0.0, 0.0);
        for a in -30..=30i64 {
            let af = a as f64;
            oracle += e2pi(af * af * tau.tau()) * e2pi(2.0 * af * z)
                / (1.0 - e2pi(z - w) * e2pi(af * tau.tau()));
        }
        assert!((got - oracle).norm() < 1e-11);
    }

    #[test]
    fn f_m_pole_collision() {
        let p = Precision::default();
        let tau = mp(0.0, 1.0);
        let w = c(0.3, 0.0);
        let r = f_m(1, w, EllipticPoint::new(w + c(1e-9, 0.0)), tau, p);
        assert!(matches!(r, Err(Error::PoleCollision { .. })));
    }

    #[test]
    fn f_m_hat_elliptic_in_z() {
        // f-hat^{(1)}_w(z+tau) = e(-(tau+2z)) f-hat^{(1)}_w(z)
        let p = Precision::default();
        let tau = mp(0.0, 1.0);
        let w = c(0.3, 0.0);
        let z = c(0.1, 0.25);
        let lhs = f_m_hat(1, w, EllipticPoint::new(z + tau.tau()), tau, p).unwrap();
        let rhs = e2pi(-(tau.tau() + 2.0 * z)) * f_m_hat(1, w, EllipticPoint::new(z), tau, p).unwrap();
        assert!((lhs - rhs).norm() / rhs.norm() < 1e-8);
    }

    #[test]
    fn f_m_hat_elliptic_in_w() {
        // f-hat^{(1)}_{w+tau}(z) = e(tau+2w) f-hat^{(1)}_w(z)
        let p = Precision::default();
        let tau = mp(0.0, 1.0);
        let w = c(0.3, 0.0);
        let z = c(0.1, 0.25);
        let lhs = f_m_hat(1, w + tau.tau(), EllipticPoint::new(z), tau, p).unwrap();
        let rhs = e2pi(tau.tau() + 2.0 * w) * f_m_hat(1, w, EllipticPoint::new(z), tau, p).unwrap();
        assert!((lhs - rhs).norm() / rhs.norm() < 1e-8);
    }

    #[test]
    fn f_m_hat_periodic_in_w() {
        let p = Precision::default();
        let tau = mp(0.0, 1.0);
        let w = c(0.3, 0.1);
        let z = c(0.1, 0.25);
        let a = f_m_hat(1, w, EllipticPoint::new(z), tau, p).unwrap();
        let b = f_m_hat(1, w + 1.0, EllipticPoint::new(z), tau, p).unwrap();
        assert!((a - b).norm() / a.norm() < 1e-12);
    }

    #[test]
    fn f_m_hat_modular_inversion() {
        // f-hat(z/tau, w/tau; -1/tau) = tau e(M(z^2-w^2)/tau) f-hat(z, w; tau)
        let p = Precision::default();
        let tau = mp(0.0, 1.0);
        let w = c(0.3, 0.1);
        let z = c(0.1, 0.25);
        let base = f_m_hat(1, w, EllipticPoint::new(z), tau, p).unwrap();
        let inv_tau = ModularPoint::new(-1.0 / tau.tau());
        let lhs =
            f_m_hat(1, w / tau.tau(), EllipticPoint::new(z / tau.tau()), inv_tau, p).unwrap();
        let rhs = tau.tau() * e2pi((z * z - w * w) / tau.tau()) * base;
        assert!((lhs - rhs).norm() / rhs.norm() < 1e-7);
    }

    /// Brute-force mu oracle: direct lattice sum, cutoff 30 for n=1.
    fn mu1_oracle(u: Complex64, v: Complex64, tau: ModularPoint, p: Precision) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for k in -30..=30i64 {
            let kf = k as f64;
            let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            s += sign * tau.q_pow(kf * kf / 2.0 + kf / 2.0) * e2pi(kf * v)
                / (1.0 - e2pi(u) * tau.q_pow(kf));
        }
        (Complex64::new(0.0, PI) * u).exp() / theta(EllipticPoint::new(v), tau, p).unwrap() * s
    }

    #[test]
    fn mu_n1_against_oracle() {
        let p = Precision::default();
        let tau = mp(0.0, 2.0);
        let u = c(0.0, 0.3);
        let v = c(0.2, 0.1);
        let args = AppellArgs::new(1, u, vec![v], 0);
        let got = mu(&args, tau, p).unwrap();
        let oracle = mu1_oracle(u, v, tau, p);
        assert!((got - oracle).norm() < 1e-11);
    }

    #[test]
    fn mu_denominator_split() {
        let p = Precision::default();
        let tau = mp(0.0, 2.0);
        let u = c(0.0, 0.3);
        let vs = vec![c(0.2, 0.1), c(0.15, -0.05)];
        let args = AppellArgs::new(2, u, vs.clone(), 0);
        let m = mu(&args, tau, p).unwrap();
        let mut denom = Complex64::new(1.0, 0.0);
        for &vj in &vs {
            denom *= theta(EllipticPoint::new(vj), tau, p).unwrap();
        }
        let bare = mu_lattice_sum(2, u, &vs, tau, p).unwrap();
        let lhs = m * denom;
        let rhs = (Complex64::new(0.0, PI) * u).exp() * bare;
        assert!((lhs - rhs).norm() < 1e-11);
    }

    #[test]
    fn mu_symmetric_in_v() {
        let p = Precision::default();
        let tau = mp(0.0, 2.0);
        let u = c(0.0, 0.3);
        let a = mu(&AppellArgs::new(2, u, vec![c(0.2, 0.0), c(0.35, 0.0)], 0), tau, p).unwrap();
        let b = mu(&AppellArgs::new(2, u, vec![c(0.35, 0.0), c(0.2, 0.0)], 0), tau, p).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn mu_shift_ell_zero_is_mu() {
        let p = Precision::default();
        let tau = mp(0.0, 2.0);
        let args = AppellArgs::new(2, c(0.0, 0.1), vec![c(0.3, 0.0), c(0.4, 0.0)], 0);
        let a = mu_shift(&args, tau, p).unwrap();
        let b = mu(&args, tau, p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mu_shift_composition() {
        let p = Precision::default();
        let tau = mp(0.0, 2.0);
        let u = c(0.0, 0.1);
        let vs = vec![c(0.3, 0.0), c(0.4, 0.0)];
        let args = AppellArgs::new(2, u, vs.clone(), 1);
        let got = mu_shift(&args, tau, p).unwrap();
        let inner = AppellArgs::new(2, u + tau.tau(), vs.clone(), 0);
        let vsum = c(0.7, 0.0);
        let expected = -tau.q_pow(-0.25) * e2pi(-(u - vsum) / 2.0) * mu(&inner, tau, p).unwrap();
        assert!((got - expected).norm() < 1e-12);
    }

    #[test]
    fn mu_shift_prefactor_modulus() {
        let p = Precision::default();
        let tau = mp(0.0, 2.0);
        let u = c(0.0, 0.1);
        let vs = vec![c(0.3, 0.0), c(0.4, 0.0)];
        let args = AppellArgs::new(2, u, vs.clone(), 1);
        let got = mu_shift(&args, tau, p).unwrap();
        let inner = AppellArgs::new(2, u + tau.tau(), vs.clone(), 0);
        let base = mu(&inner, tau, p).unwrap().norm();
        let q_factor = tau.q_pow(-0.25).norm() * e2pi(-(u - c(0.7, 0.0)) / 2.0).norm();
        assert!((got.norm() - q_factor * base).abs() < 1e-12);
    }

    #[test]
    fn mu_hat_tau_shift_phase() {
        // measure the tau -> tau+1 multiplier and compare with the candidate
        // phases; the consistent one is exp(-(pi i/n)(l^2 + n^2/4))
        let p = Precision::default();
        let n = 2u32;
        let ell = 1i64;
        let u = c(0.13, 0.21);
        let vs = vec![c(0.3, 0.05), c(0.4, -0.07)];
        let tau = mp(0.2, 1.3);
        let tau1 = mp(1.2, 1.3);
        let args = AppellArgs::new(n, u, vs.clone(), ell);
        let a = mu_hat(&args, tau1, p).unwrap();
        let b = mu_hat(&args, tau, p).unwrap();
        let measured = a / b;
        let nf = n as f64;
        let lf = ell as f64;
        let derived = (-Complex64::i() * PI / nf * (lf - nf / 2.0) * (lf - nf / 2.0)).exp();
        assert!(
            (measured - derived).norm() < 1e-8,
            "measured {measured} vs derived {derived}"
        );
    }

    #[test]
    fn rho_hat_minus_rho_identity() {
        // rho-hat - rho = e(-M a b - 2 M a u) q^{-M a^2} ((1/2) R_{M,l} - xi)(u + z_s)
        let p = Precision::default();
        let tau = mp(0.0, 1.2);
        let m = 1u32;
        let s = TorsionPoint::from_ints(1, 2, 1, 2);
        let u = c(0.0, 0.05);
        for ell in 0..2i64 {
            let args = RhoArgs::new(m, ell, s, u);
            let rh = rho_hat(&args, tau, p).unwrap();
            let r = rho(&args, tau, p).unwrap();
            let z_s = s.z_at(tau);
            let alpha = 0.5;
            let beta = 0.5;
            let pref = e2pi(Complex64::new(-(alpha * beta), 0.0) - 2.0 * alpha * u)
                * tau.q_pow(-alpha * alpha);
            let kernel = 0.5 * r_m_ell(m, ell, u + z_s, tau, p).unwrap()
                - xi(m, ell, s, u + z_s, tau);
            let expected = pref * kernel;
            assert!(
                (rh - r - expected).norm() < 1e-7,
                "l={ell}: got {} expected {}",
                rh - r,
                expected
            );
        }
    }

    #[test]
    fn rho_hat_lattice_shift() {
        // rho-hat^{(s+(lambda,mu))} = e(M(-alpha mu + beta lambda)) rho-hat^{(s)};
        // here s=(1/2,0) and (lambda,mu)=(0,1), so the phase is e(-1/2) = -1
        let p = Precision::default();
        let tau = mp(0.0, 1.2);
        let s = TorsionPoint::from_ints(1, 2, 0, 1);
        let s_shift = s.add_ints(0, 1);
        let u = c(0.03, 0.07);
        for ell in 0..2i64 {
            let a = rho_hat(&RhoArgs::new(1, ell, s_shift, u), tau, p).unwrap();
            let b = -rho_hat(&RhoArgs::new(1, ell, s, u), tau, p).unwrap();
            assert!((a - b).norm() / b.norm().max(1e-9) < 1e-7, "l={ell}: {a} vs {b}");
        }
    }

    #[test]
    fn rho_hat_matches_appell_form_even_ell() {
        // the completion-kernel form and the shifted-Appell form coincide for
        // even l (for odd l they differ by the sign of the R-term)
        let p = Precision::default();
        let tau = mp(0.0, 1.2);
        let u = c(0.03, 0.07);
        for (m, s) in [
            (1u32, TorsionPoint::from_ints(1, 2, 1, 2)),
            (1u32, TorsionPoint::zero()),
            (2u32, TorsionPoint::from_ints(1, 2, 0, 1)),
        ] {
            for ell in (0..2 * m as i64).step_by(2) {
                let args = RhoArgs::new(m, ell, s, u);
                let a = rho_hat(&args, tau, p).unwrap();
                let b = rho_hat_appell(&args, tau, p).unwrap();
                assert!(
                    (a - b).norm() / a.norm().max(1e-9) < 1e-9,
                    "M={m} l={ell}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn rho_origin_from_mu_oracle() {
        // s=(0,0), M=1, l=0: composition of the mu-hat pieces with the w-shift
        let p = Precision::default();
        let tau = mp(0.0, 1.5);
        let u = c(0.0, 0.07);
        let args = RhoArgs::new(1, 0, TorsionPoint::zero(), u);
        let got = rho_hat(&args, tau, p).unwrap();
        let mut w = vec![c(-0.5, 0.0) + tau.tau() / 2.0, c(0.5, 0.0)];
        let ap = AppellArgs::new(2, 2.0 * u + tau.tau() / 2.0, w.drain(..).collect(), 1);
        let expected = mu_hat(&ap, tau, p).unwrap();
        assert!((got - expected).norm() < 1e-12);
    }
}
