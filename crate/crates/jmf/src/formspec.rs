//! Theta-quotient forms: parsing, evaluation, pole bookkeeping, the
//! stabilizer groups of torsion points, and residual checks of the elliptic
//! and modular transformation laws.

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::Zero;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::numerics::{e2pi, lattice_distance, EllipticPoint, ModularPoint, Precision, TorsionPoint};
use crate::theta::theta;

/// Minimal distance to a pole translate below which evaluation refuses to
/// proceed.
pub const POLE_THRESHOLD: f64 = 1e-6;

/// One theta factor theta(z + alpha tau + beta)^exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FormFactor {
    pub shift: TorsionPoint,
    pub exponent: i64,
}

/// A meromorphic Jacobi form given as a quotient of shifted theta functions,
/// prefactor * prod_i theta(z + alpha_i tau + beta_i; tau)^{e_i}.
///
/// Weight and index are both half the exponent sum.
#[derive(Debug, Clone)]
pub struct ThetaQuotientForm {
    pub factors: Vec<FormFactor>,
    pub prefactor: Complex64,
}

/// A pole of the form, reduced to the fundamental cell, with its order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoleDatum {
    pub s: TorsionPoint,
    pub order: u32,
}

/// An element of SL_2(Z).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GammaElement {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl GammaElement {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        assert_eq!(a * d - b * c, 1, "determinant must be 1");
        Self { a, b, c, d }
    }

    pub fn identity() -> Self {
        Self::new(1, 0, 0, 1)
    }

    /// Moebius action on tau.
    pub fn act_tau(&self, tau: ModularPoint) -> ModularPoint {
        let t = tau.tau();
        ModularPoint::new((self.a as f64 * t + self.b as f64) / (self.c as f64 * t + self.d as f64))
    }

    /// The automorphy denominator c tau + d.
    pub fn j_factor(&self, tau: ModularPoint) -> Complex64 {
        self.c as f64 * tau.tau() + self.d as f64
    }
}

#[derive(Deserialize)]
struct FactorDoc {
    alpha: String,
    beta: String,
    exponent: i64,
}

#[derive(Deserialize)]
struct PrefactorDoc {
    re: f64,
    im: f64,
}

#[derive(Deserialize)]
struct FormDoc {
    factors: Vec<FactorDoc>,
    prefactor: Option<PrefactorDoc>,
}

fn parse_rational(s: &str) -> Result<Rational64> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: i64 = num
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational numerator in {s:?}")))?;
    let d: i64 = den
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational denominator in {s:?}")))?;
    if d == 0 {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(Rational64::new(n, d))
}

/// Parse a form document: JSON with a list of factor records
/// {"alpha": "p/q", "beta": "p/q", "exponent": n} and an optional
/// {"re", "im"} prefactor. Shifts are reduced, coincident shifts merged, and
/// the invariants (even positive exponent sum) checked.
pub fn parse_form(text: &str) -> Result<ThetaQuotientForm> {
    let doc: FormDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("invalid form document: {e}")))?;
    if doc.factors.is_empty() {
        return Err(Error::Parse("form has no factors".into()));
    }
    let mut factors: Vec<FormFactor> = Vec::new();
    for f in &doc.factors {
        if f.exponent == 0 {
            return Err(Error::Parse("factor with zero exponent".into()));
        }
        let alpha = parse_rational(&f.alpha)?;
        let beta = parse_rational(&f.beta)?;
        let (shift, _) = TorsionPoint::new(alpha, beta).reduce_to_p();
        match factors.iter_mut().find(|g| g.shift == shift) {
            Some(g) => g.exponent += f.exponent,
            None => factors.push(FormFactor { shift, exponent: f.exponent }),
        }
    }
    factors.retain(|f| f.exponent != 0);
    factors.sort_by_key(|f| (f.shift.alpha(), f.shift.beta()));
    let total: i64 = factors.iter().map(|f| f.exponent).sum();
    if total % 2 != 0 {
        return Err(Error::IndexNotIntegral);
    }
    if total <= 0 {
        return Err(Error::IndexNotPositive);
    }
    let prefactor = doc
        .prefactor
        .map(|p| Complex64::new(p.re, p.im))
        .unwrap_or(Complex64::new(1.0, 0.0));
    Ok(ThetaQuotientForm { factors, prefactor })
}

impl ThetaQuotientForm {
    /// Weight = index = half the exponent sum.
    pub fn weight(&self) -> i64 {
        self.factors.iter().map(|f| f.exponent).sum::<i64>() / 2
    }

    pub fn index_m(&self) -> u32 {
        self.weight() as u32
    }

    /// Reduced poles with orders, sorted lexicographically in (alpha, beta).
    ///
    /// theta(z + alpha tau + beta) vanishes at z = -(alpha tau + beta) modulo
    /// the lattice, so a factor with negative exponent contributes the pole
    /// s = (-alpha, -beta) reduced.
    pub fn poles(&self) -> Vec<PoleDatum> {
        let mut out: Vec<PoleDatum> = self
            .factors
            .iter()
            .filter(|f| f.exponent < 0)
            .map(|f| {
                let (s, _) = TorsionPoint::new(-f.shift.alpha(), -f.shift.beta()).reduce_to_p();
                PoleDatum { s, order: (-f.exponent) as u32 }
            })
            .collect();
        out.sort_by_key(|p| (p.s.alpha(), p.s.beta()));
        out
    }

    /// Evaluate the quotient at (z; tau).
    pub fn eval(&self, z: EllipticPoint, tau: ModularPoint, p: Precision) -> Result<Complex64> {
        for f in &self.factors {
            if f.exponent < 0 {
                let d = lattice_distance(z.z() + f.shift.z_at(tau), tau);
                if d < POLE_THRESHOLD {
                    return Err(Error::PoleCollision { dist: d });
                }
            }
        }
        let mut acc = self.prefactor;
        for f in &self.factors {
            let th = theta(EllipticPoint::new(z.z() + f.shift.z_at(tau)), tau, p)?;
            acc *= th.powi(f.exponent as i32);
        }
        Ok(acc)
    }
}

/// Convenience free function mirroring the documented operation set.
pub fn eval_form(
    form: &ThetaQuotientForm,
    z: EllipticPoint,
    tau: ModularPoint,
    p: Precision,
) -> Result<Complex64> {
    form.eval(z, tau, p)
}

pub fn poles(form: &ThetaQuotientForm) -> Vec<PoleDatum> {
    form.poles()
}

/// Membership in the stabilizer group of a torsion point (alpha, beta) at
/// index M: (a-1)alpha + c beta, b alpha + (d-1)beta, and
/// M(c beta^2 - b alpha^2 + (d-a) alpha beta) must all be integers.
pub fn gamma_ab_contains(g: GammaElement, alpha: Rational64, beta: Rational64, m: u32) -> bool {
    let a = Rational64::from_integer(g.a);
    let b = Rational64::from_integer(g.b);
    let c = Rational64::from_integer(g.c);
    let d = Rational64::from_integer(g.d);
    let one = Rational64::from_integer(1);
    let mf = Rational64::from_integer(m as i64);
    let c1 = (a - one) * alpha + c * beta;
    let c2 = b * alpha + (d - one) * beta;
    let c3 = mf * (c * beta * beta - b * alpha * alpha + (d - a) * alpha * beta);
    is_integer(c1) && is_integer(c2) && is_integer(c3)
}

fn is_integer(x: Rational64) -> bool {
    x.fract().is_zero()
}

/// Membership in the intersection of the stabilizers over all reduced poles
/// of the form.
pub fn gamma_phi_contains(g: GammaElement, form: &ThetaQuotientForm) -> bool {
    let m = form.index_m();
    form.poles()
        .iter()
        .all(|p| gamma_ab_contains(g, p.s.alpha(), p.s.beta(), m))
}

/// Residual of the elliptic transformation law
/// phi(z + lambda tau + mu) = e(-M(lambda^2 tau + 2 lambda z)) phi(z), up to
/// a reported unit phase.
pub fn check_elliptic(
    form: &ThetaQuotientForm,
    lambda: i64,
    mu: i64,
    z: EllipticPoint,
    tau: ModularPoint,
    p: Precision,
) -> Result<(f64, Complex64)> {
    let m = form.index_m() as f64;
    let base = form.eval(z, tau, p)?;
    let shifted = form.eval(
        EllipticPoint::new(z.z() + lambda as f64 * tau.tau() + mu as f64),
        tau,
        p,
    )?;
    let expected = e2pi(-m * (lambda as f64 * lambda as f64 * tau.tau() + 2.0 * lambda as f64 * z.z()))
        * base;
    let phase = shifted / expected;
    let residual = (shifted - expected).norm() / base.norm();
    Ok((residual, phase))
}

/// Observed multiplier of the modular transformation law
/// phi(z/(c tau+d); g tau) = multiplier (c tau+d)^k e(Mcz^2/(c tau+d)) phi(z; tau),
/// returned with | |multiplier| - 1 | as the residual.
pub fn check_modular(
    form: &ThetaQuotientForm,
    g: GammaElement,
    z: EllipticPoint,
    tau: ModularPoint,
    p: Precision,
) -> Result<(f64, Complex64)> {
    let k = form.weight() as i32;
    let m = form.index_m() as f64;
    let j = g.j_factor(tau);
    let base = form.eval(z, tau, p)?;
    let transformed = form.eval(EllipticPoint::new(z.z() / j), g.act_tau(tau), p)?;
    let expected = j.powi(k) * e2pi(m * g.c as f64 * z.z() * z.z() / j) * base;
    let multiplier = transformed / expected;
    let residual = (multiplier.norm() - 1.0).abs();
    Ok((residual, multiplier))
}

#[cfg(test)]
mod tests {
    use super::*;

    const KW_FORM: &str = r#"{"factors":[
        {"alpha":"0","beta":"1/2","exponent":4},
        {"alpha":"0","beta":"0","exponent":-2}
    ]}"#;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mp(re: f64, im: f64) -> ModularPoint {
        ModularPoint::new(c(re, im))
    }

    fn ep(re: f64, im: f64) -> EllipticPoint {
        EllipticPoint::new(c(re, im))
    }

    #[test]
    fn parse_theta_quotient() {
        let f = parse_form(KW_FORM).unwrap();
        assert_eq!(f.weight(), 1);
        assert_eq!(f.index_m(), 1);
        let poles = f.poles();
        assert_eq!(poles.len(), 1);
        assert!(poles[0].s.is_zero());
        assert_eq!(poles[0].order, 2);
    }

    #[test]
    fn parse_holomorphic_square() {
        let f = parse_form(r#"{"factors":[{"alpha":"0","beta":"0","exponent":2}]}"#).unwrap();
        assert_eq!(f.index_m(), 1);
        assert!(f.poles().is_empty());
    }

    #[test]
    fn parse_odd_exponent_sum() {
        let r = parse_form(r#"{"factors":[{"alpha":"0","beta":"0","exponent":3}]}"#);
        assert!(matches!(r, Err(Error::IndexNotIntegral)));
    }

    #[test]
    fn parse_nonpositive_sum() {
        let r = parse_form(r#"{"factors":[{"alpha":"0","beta":"0","exponent":-2}]}"#);
        assert!(matches!(r, Err(Error::IndexNotPositive)));
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(matches!(parse_form("not json"), Err(Error::Parse(_))));
        let bad = r#"{"factors":[{"alpha":"1/0","beta":"0","exponent":2}]}"#;
        assert!(matches!(parse_form(bad), Err(Error::Parse(_))));
    }

    #[test]
    fn parse_merges_coincident_shifts() {
        let f = parse_form(
            r#"{"factors":[
                {"alpha":"0","beta":"1/2","exponent":3},
                {"alpha":"1","beta":"3/2","exponent":1},
                {"alpha":"0","beta":"0","exponent":-2}
            ]}"#,
        )
        .unwrap();
        assert_eq!(f.factors.len(), 2);
        assert_eq!(f.weight(), 1);
    }

    #[test]
    fn eval_against_componentwise_oracle() {
        let p = Precision::default();
        let f = parse_form(KW_FORM).unwrap();
        let tau = mp(0.0, 1.0);
        let z = ep(0.25, 0.0);
        let got = f.eval(z, tau, p).unwrap();
        let num = theta(ep(0.75, 0.0), tau, p).unwrap().powi(4);
        let den = theta(z, tau, p).unwrap().powi(2);
        let expected = num / den;
        assert!((got - expected).norm() < 1e-12 * expected.norm());
    }

    #[test]
    fn eval_zero_at_theta_zero() {
        let p = Precision::default();
        let f = parse_form(r#"{"factors":[{"alpha":"0","beta":"0","exponent":2}]}"#).unwrap();
        let got = f.eval(ep(0.0, 0.0), mp(0.0, 1.0), p).unwrap();
        assert!(got.norm() < 1e-20);
    }

    #[test]
    fn eval_double_pole_scaling() {
        let p = Precision::default();
        let f = parse_form(KW_FORM).unwrap();
        let tau = mp(0.0, 1.0);
        let near = f.eval(ep(1e-3, 0.0), tau, p).unwrap();
        let far = f.eval(ep(1e-1, 0.0), tau, p).unwrap();
        assert!(near.norm() > 1e4 * far.norm());
    }

    #[test]
    fn eval_pole_collision() {
        let p = Precision::default();
        let f = parse_form(KW_FORM).unwrap();
        let r = f.eval(ep(1e-9, 0.0), mp(0.0, 1.0), p);
        assert!(matches!(r, Err(Error::PoleCollision { .. })));
    }

    #[test]
    fn poles_shift_reduction() {
        let f = parse_form(
            r#"{"factors":[
                {"alpha":"0","beta":"1/2","exponent":4},
                {"alpha":"1/2","beta":"1/2","exponent":-2}
            ]}"#,
        )
        .unwrap();
        let ps = f.poles();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps[0].s, TorsionPoint::from_ints(1, 2, 1, 2));
        assert_eq!(ps[0].order, 2);
    }

    #[test]
    fn poles_two_sites() {
        let f = parse_form(
            r#"{"factors":[
                {"alpha":"0","beta":"1/2","exponent":6},
                {"alpha":"0","beta":"0","exponent":-2},
                {"alpha":"1/2","beta":"1/2","exponent":-2}
            ]}"#,
        )
        .unwrap();
        let ps = f.poles();
        assert_eq!(ps.len(), 2);
        assert!(ps.iter().all(|p| p.order == 2));
    }

    #[test]
    fn gamma_ab_identity_and_origin() {
        let half = Rational64::new(1, 2);
        let zero = Rational64::from_integer(0);
        assert!(gamma_ab_contains(GammaElement::identity(), half, half, 3));
        // at (0,0) every element qualifies
        let s = GammaElement::new(0, -1, 1, 0);
        let t = GammaElement::new(1, 1, 0, 1);
        assert!(gamma_ab_contains(s, zero, zero, 1));
        assert!(gamma_ab_contains(t, zero, zero, 1));
    }

    #[test]
    fn gamma_ab_t_fails_at_half() {
        let t = GammaElement::new(1, 1, 0, 1);
        assert!(!gamma_ab_contains(t, Rational64::new(1, 2), Rational64::from_integer(0), 1));
    }

    #[test]
    fn gamma_phi_origin_form_is_full() {
        let f = parse_form(KW_FORM).unwrap();
        assert!(gamma_phi_contains(GammaElement::new(0, -1, 1, 0), &f));
        assert!(gamma_phi_contains(GammaElement::new(1, 1, 0, 1), &f));
    }

    #[test]
    fn gamma_phi_congruence_level_four() {
        // pole at (1/2,1/2): anything congruent to the identity mod 4 works
        let f = parse_form(
            r#"{"factors":[
                {"alpha":"0","beta":"1/2","exponent":4},
                {"alpha":"1/2","beta":"1/2","exponent":-2}
            ]}"#,
        )
        .unwrap();
        for g in [
            GammaElement::new(1, 4, 0, 1),
            GammaElement::new(1, 0, 4, 1),
            GammaElement::new(5, 4, 4 * 4, 13),
        ] {
            assert!(gamma_phi_contains(g, &f), "{g:?}");
        }
        assert!(!gamma_phi_contains(GammaElement::new(1, 1, 0, 1), &f));
    }

    #[test]
    fn gamma_phi_t_fails_for_half_zero_pole() {
        let f = parse_form(
            r#"{"factors":[
                {"alpha":"0","beta":"1/2","exponent":4},
                {"alpha":"1/2","beta":"0","exponent":-2}
            ]}"#,
        )
        .unwrap();
        assert!(!gamma_phi_contains(GammaElement::new(1, 1, 0, 1), &f));
    }

    #[test]
    fn elliptic_identity_shift() {
        let p = Precision::default();
        let f = parse_form(KW_FORM).unwrap();
        let (res, phase) = check_elliptic(&f, 0, 0, ep(0.2, 0.1), mp(0.0, 1.0), p).unwrap();
        assert!(res < 1e-14);
        assert!((phase - 1.0).norm() < 1e-14);
    }

    #[test]
    fn elliptic_tau_shift_theta_square() {
        let p = Precision::default();
        let f = parse_form(r#"{"factors":[{"alpha":"0","beta":"0","exponent":2}]}"#).unwrap();
        let (res, _) = check_elliptic(&f, 1, 0, ep(0.2, 0.1), mp(0.0, 1.0), p).unwrap();
        assert!(res < 1e-9, "residual {res}");
    }

    #[test]
    fn elliptic_unit_shift_phase() {
        let p = Precision::default();
        let f = parse_form(KW_FORM).unwrap();
        let (res, phase) = check_elliptic(&f, 0, 1, ep(0.2, 0.1), mp(0.0, 1.0), p).unwrap();
        assert!(res < 1e-9, "residual {res}");
        assert!((phase.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn modular_identity() {
        let p = Precision::default();
        let f = parse_form(KW_FORM).unwrap();
        let (res, mult) =
            check_modular(&f, GammaElement::identity(), ep(0.2, 0.0), mp(0.0, 1.0), p).unwrap();
        assert!(res < 1e-14);
        assert!((mult - 1.0).norm() < 1e-14);
    }

    #[test]
    fn modular_inversion_theta_square() {
        let p = Precision::default();
        let f = parse_form(r#"{"factors":[{"alpha":"0","beta":"0","exponent":2}]}"#).unwrap();
        let s = GammaElement::new(0, -1, 1, 0);
        let (res, mult) = check_modular(&f, s, ep(0.2, 0.0), mp(0.0, 1.0), p).unwrap();
        assert!(res < 1e-8, "residual {res}");
        // the multiplier of theta^2 under S is an 8th root of unity
        let m8 = mult.powi(8);
        assert!((m8 - 1.0).norm() < 1e-7, "mult^8 = {m8}");
    }

    #[test]
    fn modular_t_shift() {
        let p = Precision::default();
        let f = parse_form(KW_FORM).unwrap();
        let t = GammaElement::new(1, 1, 0, 1);
        let (res, _) = check_modular(&f, t, ep(0.2, 0.0), mp(0.3, 1.1), p).unwrap();
        assert!(res < 1e-8, "residual {res}");
    }

    #[test]
    fn weight_index_fit_under_inversion() {
        // with the declared (k, M) the S-multiplier has modulus 1 at several
        // z; a wrong weight or index would leave a z-dependent modulus
        let p = Precision::default();
        let s = GammaElement::new(0, -1, 1, 0);
        let t = GammaElement::new(1, 1, 0, 1);
        // each form paired with an element preserving its shift set
        for (text, g) in [
            (r#"{"factors":[{"alpha":"0","beta":"0","exponent":2}]}"#, s),
            (r#"{"factors":[{"alpha":"0","beta":"0","exponent":4}]}"#, s),
            (KW_FORM, t),
            (
                r#"{"factors":[
                    {"alpha":"0","beta":"1/2","exponent":6},
                    {"alpha":"0","beta":"0","exponent":-4}
                ]}"#,
                t,
            ),
        ] {
            let f = parse_form(text).unwrap();
            for z in [ep(0.21, 0.06), ep(0.37, -0.11)] {
                let (res, _) = check_modular(&f, g, z, mp(0.1, 1.0), p).unwrap();
                assert!(res < 1e-6, "form {text}: residual {res}");
            }
        }
    }

    #[test]
    fn pole_set_invariant_under_gamma_phi() {
        let f = parse_form(
            r#"{"factors":[
                {"alpha":"0","beta":"1/2","exponent":4},
                {"alpha":"1/2","beta":"1/2","exponent":-2}
            ]}"#,
        )
        .unwrap();
        let ps: Vec<TorsionPoint> = f.poles().iter().map(|p| p.s).collect();
        for g in [GammaElement::new(1, 4, 0, 1), GammaElement::new(5, 4, 16, 13)] {
            assert!(gamma_phi_contains(g, &f));
            let mapped: Vec<TorsionPoint> = ps
                .iter()
                .map(|s| s.act_right(g.a, g.b, g.c, g.d).reduce_to_p().0)
                .collect();
            assert_eq!(ps, mapped, "{g:?}");
        }
    }

    #[test]
    fn unit_shift_is_unit_phase() {
        let p = Precision::default();
        let f = parse_form(KW_FORM).unwrap();
        let tau = mp(0.2, 0.9);
        let z = ep(0.13, 0.21);
        let a = f.eval(ep(z.x() + 1.0, z.y()), tau, p).unwrap();
        let b = f.eval(z, tau, p).unwrap();
        assert!(((a / b).norm() - 1.0).abs() < 1e-10);
    }
}
