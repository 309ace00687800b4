//! Exact truncated series oracle: two-variable band expansions of theta
//! quotients and q-expansions of their canonical coefficients, used as the
//! independent ground truth for values obtained by quadrature.
//!
//! A `QSeries` is a sparse Laurent polynomial in q^{1/d}; a `BandSeries`
//! attaches one `QSeries` to each zeta-power and is valid in a horizontal
//! band A_lo < Im(z)/v < A_hi, where the geometric expansion of each
//! reciprocal theta factor converges.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::formspec::ThetaQuotientForm;
use crate::numerics::{e2pi, EllipticPoint, ModularPoint, TorsionPoint};

/// Coefficients below this magnitude are pruned.
const PRUNE: f64 = 1e-30;

/// Sparse Laurent series in q^{1/den}; `coeffs[n]` multiplies q^{n/den}.
/// Exponents above `trunc` (in 1/den units) are unknown and never stored.
#[derive(Debug, Clone)]
pub struct QSeries {
    pub den: i64,
    pub coeffs: BTreeMap<i64, Complex64>,
    pub trunc: i64,
}

impl QSeries {
    pub fn zero(den: i64, trunc: i64) -> Self {
        assert!(den > 0);
        Self { den, coeffs: BTreeMap::new(), trunc }
    }

    pub fn monomial(den: i64, exp: i64, c: Complex64, trunc: i64) -> Self {
        let mut s = Self::zero(den, trunc);
        if exp <= trunc && c.norm() > PRUNE {
            s.coeffs.insert(exp, c);
        }
        s
    }

    pub fn one(den: i64, trunc: i64) -> Self {
        Self::monomial(den, 0, Complex64::new(1.0, 0.0), trunc)
    }

    /// Smallest stored exponent, if any.
    pub fn floor(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn add_term(&mut self, exp: i64, c: Complex64) {
        if exp > self.trunc {
            return;
        }
        let e = self.coeffs.entry(exp).or_insert(Complex64::new(0.0, 0.0));
        *e += c;
        if e.norm() <= PRUNE {
            self.coeffs.remove(&exp);
        }
    }

    /// Re-express on a denominator that is a multiple of the current one.
    pub fn with_den(&self, den: i64) -> QSeries {
        assert_eq!(den % self.den, 0);
        let k = den / self.den;
        QSeries {
            den,
            coeffs: self.coeffs.iter().map(|(&n, &c)| (n * k, c)).collect(),
            trunc: self.trunc.saturating_mul(k),
        }
    }

    pub fn scale(&self, c: Complex64) -> QSeries {
        let mut out = self.clone();
        for v in out.coeffs.values_mut() {
            *v *= c;
        }
        out.coeffs.retain(|_, v| v.norm() > PRUNE);
        out
    }

    pub fn neg(&self) -> QSeries {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn eval(&self, tau: ModularPoint) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(&n, &c)| c * tau.q_pow(n as f64 / self.den as f64))
            .sum()
    }

    /// Structured-text export: rows (numerator, denominator, re, im).
    pub fn export_rows(&self) -> Vec<(i64, i64, f64, f64)> {
        self.coeffs
            .iter()
            .map(|(&n, &c)| (n, self.den, c.re, c.im))
            .collect()
    }

    /// Largest coefficient magnitude (0 for the zero series).
    pub fn max_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

fn aligned(a: &QSeries, b: &QSeries) -> (QSeries, QSeries) {
    let d = a.den.lcm(&b.den);
    (a.with_den(d), b.with_den(d))
}

pub fn qs_add(a: &QSeries, b: &QSeries) -> QSeries {
    let (a, b) = aligned(a, b);
    let mut out = QSeries::zero(a.den, a.trunc.min(b.trunc));
    for (&n, &c) in a.coeffs.iter().chain(b.coeffs.iter()) {
        out.add_term(n, c);
    }
    out
}

pub fn qs_mul(a: &QSeries, b: &QSeries) -> QSeries {
    let (a, b) = aligned(a, b);
    // unknown tail of one operand times the floor of the other bounds validity
    let trunc = match (a.floor(), b.floor()) {
        (Some(fa), Some(fb)) => (a.trunc + fb).min(b.trunc + fa),
        _ => a.trunc.min(b.trunc),
    };
    let mut out = QSeries::zero(a.den, trunc);
    for (&n, &c) in &a.coeffs {
        for (&m, &d) in &b.coeffs {
            if n + m > trunc {
                break;
            }
            out.add_term(n + m, c * d);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QsOp {
    Add,
    Mul,
}

pub fn qs_arith(a: &QSeries, b: &QSeries, op: QsOp) -> QSeries {
    match op {
        QsOp::Add => qs_add(a, b),
        QsOp::Mul => qs_mul(a, b),
    }
}

/// Inversion about the leading term by the triangular recurrence
/// b_m = -(1/a_0)(a_1 b_{m-1} + ... + a_m b_0); much better conditioned than
/// summing the geometric series of the relative remainder.
pub fn qs_invert(a: &QSeries) -> Result<QSeries> {
    let f = a.floor().ok_or(Error::LeadingZero)?;
    let lead = a.coeffs[&f];
    if lead.norm() <= PRUNE {
        return Err(Error::LeadingZero);
    }
    // relative series a_m := coeff at f+m; solve sum_j a_j b_{m-j} = [m=0]
    let rel_trunc = a.trunc - f;
    let rel: BTreeMap<i64, Complex64> = a.coeffs.iter().map(|(&n, &c)| (n - f, c)).collect();
    let mut b: BTreeMap<i64, Complex64> = BTreeMap::new();
    b.insert(0, 1.0 / lead);
    for m in 1..=rel_trunc {
        let mut s = Complex64::new(0.0, 0.0);
        for (&j, &aj) in rel.range(1..=m) {
            if let Some(&bv) = b.get(&(m - j)) {
                s += aj * bv;
            }
        }
        if s.norm() > PRUNE {
            b.insert(m, -s / lead);
        }
    }
    let mut out = QSeries::zero(a.den, a.trunc - 2 * f);
    for (&m, &c) in &b {
        out.add_term(m - f, c);
    }
    Ok(out)
}

/// Open horizontal band A_lo < Im(z)/v < A_hi.
#[derive(Debug, Clone, Copy)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo < hi);
        Self { lo, hi }
    }
}

/// Fourier expansion valid in a band: `terms[r]` multiplies zeta^{r/2}
/// (half-units accommodate the odd theta prefactor).
#[derive(Debug, Clone)]
pub struct BandSeries {
    pub den: i64,
    pub band: Band,
    pub terms: BTreeMap<i64, QSeries>,
    pub trunc: i64,
    pub zwin: i64,
}

impl BandSeries {
    fn zero(den: i64, band: Band, trunc: i64, zwin: i64) -> Self {
        Self { den, band, terms: BTreeMap::new(), trunc, zwin }
    }

    fn monomial(den: i64, band: Band, trunc: i64, zwin: i64, r: i64, exp: i64, c: Complex64) -> Self {
        let mut s = Self::zero(den, band, trunc, zwin);
        s.terms.insert(r, QSeries::monomial(den, exp, c, trunc));
        s
    }

    fn add_term(&mut self, r: i64, exp: i64, c: Complex64) {
        if r.abs() > self.zwin || exp > self.trunc {
            return;
        }
        let den = self.den;
        let trunc = self.trunc;
        self.terms
            .entry(r)
            .or_insert_with(|| QSeries::zero(den, trunc))
            .add_term(exp, c);
    }

    fn mul(&self, other: &BandSeries) -> BandSeries {
        let mut out = BandSeries::zero(self.den, self.band, self.trunc, self.zwin);
        for (&r1, q1) in &self.terms {
            for (&r2, q2) in &other.terms {
                let r = r1 + r2;
                if r.abs() > self.zwin {
                    continue;
                }
                for (&n, &c) in &q1.coeffs {
                    for (&m, &d) in &q2.coeffs {
                        if n + m > self.trunc {
                            break;
                        }
                        out.add_term(r, n + m, c * d);
                    }
                }
            }
        }
        out.terms.retain(|_, q| !q.is_zero());
        out
    }

    /// Evaluate at a point; the caller is responsible for staying inside the
    /// band (values outside it are meaningless).
    pub fn eval(&self, z: EllipticPoint, tau: ModularPoint) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&r, q) in &self.terms {
            // zeta^{r/2} = e^{pi i r z}
            let zpow = (Complex64::new(0.0, std::f64::consts::PI) * r as f64 * z.z()).exp();
            acc += zpow * q.eval(tau);
        }
        acc
    }

    /// The QSeries attached to zeta^ell (integer power).
    pub fn zeta_coefficient(&self, ell: i64) -> QSeries {
        self.terms
            .get(&(2 * ell))
            .cloned()
            .unwrap_or_else(|| QSeries::zero(self.den, self.trunc))
    }
}

/// Expansion of 1/(1 - c zeta^{sigma} q^{mu}) in the band: the convergent
/// geometric direction is picked by the side of the wall Im(z)/v = -sigma mu;
/// a wall strictly inside the band is an error.
fn geom_factor(
    c: Complex64,
    sigma: i64,
    mu_units: i64,
    den: i64,
    band: Band,
    trunc: i64,
    zwin: i64,
) -> Result<BandSeries> {
    const EDGE: f64 = 1e-12;
    let mu = mu_units as f64 / den as f64;
    let mut out = BandSeries::zero(den, band, trunc, zwin);
    let direct = if sigma == 0 {
        assert!(mu_units > 0, "scalar geometric factor needs positive exponent");
        true
    } else {
        let wall = -sigma as f64 * mu;
        let above = if sigma > 0 { band.lo >= wall - EDGE } else { band.hi <= wall + EDGE };
        let below = if sigma > 0 { band.hi <= wall + EDGE } else { band.lo >= wall - EDGE };
        if above {
            true
        } else if below {
            false
        } else {
            return Err(Error::BandContainsPole { height: wall });
        }
    };
    if direct {
        // sum_{k>=0} c^k zeta^{sigma k} q^{k mu}
        let mut cp = Complex64::new(1.0, 0.0);
        let mut k = 0i64;
        loop {
            let r = 2 * sigma * k;
            let exp = k * mu_units;
            let ok_q = mu_units <= 0 || exp <= trunc;
            let ok_z = sigma == 0 || r.abs() <= zwin;
            if !(ok_q && ok_z) {
                break;
            }
            out.add_term(r, exp, cp);
            cp *= c;
            k += 1;
            if k > 20 * (trunc + zwin + 2) {
                break;
            }
        }
    } else {
        // 1/(1-x) = -sum_{k>=1} x^{-k}
        let cinv = 1.0 / c;
        let mut cp = cinv;
        let mut k = 1i64;
        loop {
            let r = -2 * sigma * k;
            let exp = -k * mu_units;
            let ok_q = mu_units >= 0 || exp <= trunc;
            let ok_z = r.abs() <= zwin;
            if !(ok_q && ok_z) {
                break;
            }
            out.add_term(r, exp, -cp);
            cp *= cinv;
            k += 1;
            if k > 20 * (trunc + zwin + 2) {
                break;
            }
        }
    }
    Ok(out)
}

fn rational_units(x: Rational64, den: i64) -> i64 {
    let scaled = x * Rational64::from_integer(den);
    assert!(scaled.is_integer(), "denominator {den} does not clear {x}");
    scaled.to_integer()
}

/// Common fractional denominator for a form: clears 1/8, every alpha/2 and
/// the index-dependent q^{l^2/4M} prefactors.
pub fn form_denominator(form: &ThetaQuotientForm) -> i64 {
    let mut d: i64 = 8.lcm(&(4 * form.index_m() as i64));
    for f in &form.factors {
        d = d.lcm(&(2 * *f.shift.alpha().denom()));
        d = d.lcm(&(2 * *f.shift.beta().denom()));
    }
    d
}

/// Band-dependent Fourier expansion of the quotient via the triple product:
/// theta = i q^{1/8}(zeta_s^{1/2} - zeta_s^{-1/2}) prod (1-q^n)(1-zeta_s q^n)(1-zeta_s^{-1} q^n)
/// with zeta_s = zeta q^{alpha} e(beta); reciprocal factors are expanded
/// geometrically in the direction convergent inside the band.
pub fn band_expand(form: &ThetaQuotientForm, band: Band, q_orders: i64) -> Result<BandSeries> {
    assert!(q_orders > 0);
    let den = form_denominator(form);
    // working margin: inverted factors carry small negative floors
    let trunc = (q_orders + 3) * den;
    let zwin = 2 * q_orders + 48;
    let n_max = q_orders + 2;

    let mut acc =
        BandSeries::monomial(den, band, trunc, zwin, 0, 0, form.prefactor);
    for f in &form.factors {
        let alpha = f.shift.alpha();
        let beta = f.shift.beta();
        let a_units = rational_units(alpha, den);
        let half_a_units = rational_units(alpha / 2, den);
        let eb = e2pi(Complex64::new(*beta.numer() as f64 / *beta.denom() as f64, 0.0));
        let eb_half = e2pi(Complex64::new(*beta.numer() as f64 / (2 * *beta.denom()) as f64, 0.0));
        let reps = f.exponent.unsigned_abs();
        let inverted = f.exponent < 0;
        for _ in 0..reps {
            if !inverted {
                // i q^{1/8} (zeta^{1/2} q^{a/2} e(b/2) - zeta^{-1/2} q^{-a/2} e(-b/2))
                let mut pref = BandSeries::zero(den, band, trunc, zwin);
                pref.add_term(1, half_a_units, Complex64::i() * eb_half);
                pref.add_term(-1, -half_a_units, -Complex64::i() / eb_half);
                let eighth = BandSeries::monomial(
                    den, band, trunc, zwin, 0, den / 8, Complex64::new(1.0, 0.0),
                );
                acc = acc.mul(&eighth).mul(&pref);
                for n in 1..=n_max {
                    let nu = n * den;
                    let mut fac = BandSeries::zero(den, band, trunc, zwin);
                    fac.add_term(0, 0, Complex64::new(1.0, 0.0));
                    fac.add_term(0, nu, Complex64::new(-1.0, 0.0));
                    let mut fa = BandSeries::zero(den, band, trunc, zwin);
                    fa.add_term(0, 0, Complex64::new(1.0, 0.0));
                    fa.add_term(2, nu + a_units, -eb);
                    let mut fb = BandSeries::zero(den, band, trunc, zwin);
                    fb.add_term(0, 0, Complex64::new(1.0, 0.0));
                    fb.add_term(-2, nu - a_units, -1.0 / eb);
                    acc = acc.mul(&fac).mul(&fa).mul(&fb);
                }
            } else {
                // 1/theta: invert the monomial prefactor
                // i q^{1/8} zeta^{1/2} q^{a/2} e(b/2), then each (1-x) factor
                let lead = BandSeries::monomial(
                    den,
                    band,
                    trunc,
                    zwin,
                    -1,
                    -den / 8 - half_a_units,
                    1.0 / (Complex64::i() * eb_half),
                );
                acc = acc.mul(&lead);
                // (1 - zeta^{-1} q^{-a} e(-b)) from the odd prefactor
                let g0 = geom_factor(1.0 / eb, -1, -a_units, den, band, trunc, zwin)?;
                acc = acc.mul(&g0);
                for n in 1..=n_max {
                    let nu = n * den;
                    let ge = geom_factor(Complex64::new(1.0, 0.0), 0, nu, den, band, trunc, zwin)?;
                    let ga = geom_factor(eb, 1, nu + a_units, den, band, trunc, zwin)?;
                    let gb = geom_factor(1.0 / eb, -1, nu - a_units, den, band, trunc, zwin)?;
                    acc = acc.mul(&ge).mul(&ga).mul(&gb);
                }
            }
        }
    }
    // shrink to the requested order
    acc.trunc = q_orders * den;
    for q in acc.terms.values_mut() {
        q.trunc = q.trunc.min(q_orders * den);
        q.coeffs.retain(|&n, _| n <= q_orders * den);
    }
    acc.terms.retain(|_, q| !q.is_zero());
    Ok(acc)
}

/// q-expansion of the band-dependent canonical coefficient:
/// q^{-l^2/4M} times the zeta^l coefficient of the expansion.
pub fn h_band(form: &ThetaQuotientForm, ell: i64, band: Band, q_orders: i64) -> Result<QSeries> {
    let bs = band_expand(form, band, q_orders)?;
    let coeff = bs.zeta_coefficient(ell);
    let m = form.index_m() as i64;
    let shift = Rational64::new(-ell * ell, 4 * m);
    let d = coeff.den.lcm(shift.denom());
    let mono = QSeries::monomial(d, rational_units(shift, d), Complex64::new(1.0, 0.0), i64::MAX / 4);
    Ok(qs_mul(&coeff.with_den(d), &mono))
}

// ---------------------------------------------------------------------------
// epsilon-Taylor machinery over QSeries, for exact residues at a pole

/// Laurent polynomial in epsilon with QSeries coefficients:
/// sum_j coeffs[j] eps^{floor+j}.
#[derive(Debug, Clone)]
struct EpsSeries {
    floor: i64,
    coeffs: Vec<QSeries>,
    len: usize,
}

impl EpsSeries {
    fn from_taylor(coeffs: Vec<QSeries>, len: usize) -> Self {
        Self { floor: 0, coeffs, len }
    }

    fn coeff_at(&self, pow: i64, den: i64, trunc: i64) -> QSeries {
        let idx = pow - self.floor;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            QSeries::zero(den, trunc)
        } else {
            self.coeffs[idx as usize].clone()
        }
    }

    fn mul(&self, other: &EpsSeries, den: i64, trunc: i64) -> EpsSeries {
        let floor = self.floor + other.floor;
        let n = self.len;
        let mut out: Vec<QSeries> = (0..n).map(|_| QSeries::zero(den, trunc)).collect();
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j >= n || b.is_zero() {
                    continue;
                }
                out[i + j] = qs_add(&out[i + j], &qs_mul(a, b));
            }
        }
        EpsSeries { floor, coeffs: out, len: n }
    }

    /// Invert, shifting the floor by the order of vanishing in epsilon.
    /// Coefficients that are numerically negligible relative to the largest
    /// one are treated as exact zeros when locating the leading term.
    fn invert(&self, den: i64, trunc: i64) -> Result<EpsSeries> {
        let scale = self
            .coeffs
            .iter()
            .map(|q| q.max_norm())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(Error::LeadingZero);
        }
        let lead_idx = self
            .coeffs
            .iter()
            .position(|q| q.max_norm() > 1e-12 * scale)
            .ok_or(Error::LeadingZero)?;
        let n = self.len;
        let lead = &self.coeffs[lead_idx];
        let lead_inv = qs_invert(lead)?;
        // u = 1 + r with r = lead^{-1} (higher eps terms)
        let mut r: Vec<QSeries> = (0..n).map(|_| QSeries::zero(den, trunc)).collect();
        for (j, c) in self.coeffs[lead_idx + 1..].iter().enumerate() {
            if !c.is_zero() {
                r[j + 1] = qs_mul(c, &lead_inv);
            }
        }
        let mut acc: Vec<QSeries> = (0..n).map(|_| QSeries::zero(den, trunc)).collect();
        acc[0] = QSeries::one(den, trunc);
        let mut pw: Vec<QSeries> = acc.clone();
        for _ in 0..n {
            // pw *= -r
            let mut next: Vec<QSeries> = (0..n).map(|_| QSeries::zero(den, trunc)).collect();
            for (i, a) in pw.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for (j, b) in r.iter().enumerate() {
                    if i + j >= n || b.is_zero() {
                        continue;
                    }
                    next[i + j] = qs_add(&next[i + j], &qs_mul(a, b).neg());
                }
            }
            pw = next;
            if pw.iter().all(|q| q.is_zero()) {
                break;
            }
            for (a, b) in acc.iter_mut().zip(pw.iter()) {
                *a = qs_add(a, b);
            }
        }
        let out: Vec<QSeries> = acc.iter().map(|c| qs_mul(c, &lead_inv)).collect();
        Ok(EpsSeries {
            floor: -(self.floor + lead_idx as i64),
            coeffs: out,
            len: n,
        })
    }
}

/// eps-Taylor coefficients of theta(eps + a tau + b):
/// eps^m coefficient = sum_nu (2 pi i nu)^m / m! q^{nu^2/2 + nu a} e(nu(b+1/2)).
fn theta_eps_taylor(a: Rational64, b: Rational64, den: i64, trunc: i64, len: usize) -> EpsSeries {
    let af = *a.numer() as f64 / *a.denom() as f64;
    let bf = *b.numer() as f64 / *b.denom() as f64;
    let orders = trunc as f64 / den as f64;
    let nu_max = ((2.0 * (orders + af.abs() * af.abs() + 2.0)).sqrt() + af.abs() + 3.0).ceil() as i64;
    let mut coeffs: Vec<QSeries> = (0..len).map(|_| QSeries::zero(den, trunc)).collect();
    for j in -nu_max..nu_max {
        let nu = Rational64::new(2 * j + 1, 2);
        let nuf = *nu.numer() as f64 / *nu.denom() as f64;
        let exp_rat = nu * nu / Rational64::from_integer(2) + nu * a;
        let units = rational_units(exp_rat, den);
        if units > trunc {
            continue;
        }
        let phase = e2pi(Complex64::new(nuf * (bf + 0.5), 0.0));
        let mut fac = Complex64::new(1.0, 0.0);
        let dnu = Complex64::new(0.0, 2.0 * std::f64::consts::PI * nuf);
        for (m, c) in coeffs.iter_mut().enumerate() {
            c.add_term(units, phase * fac);
            fac *= dnu / (m as f64 + 1.0);
        }
    }
    coeffs
        .iter_mut()
        .for_each(|c| c.coeffs.retain(|_, v| v.norm() > PRUNE));
    EpsSeries::from_taylor(coeffs, len)
}

/// q-expansion of q^{-l^2/4M} Res_{z=z_s} phi(z) zeta^{-l}: the exact
/// wall-crossing jump of the band coefficient across the pole line of s
/// (up to the 2 pi i of the residue theorem, left to the caller).
pub fn residue_series(
    form: &ThetaQuotientForm,
    s: TorsionPoint,
    ell: i64,
    q_orders: i64,
) -> Result<QSeries> {
    let m = form.index_m() as i64;
    let mut den = form_denominator(form);
    den = den.lcm(&(4 * m)).lcm(&(2 * *s.alpha().denom())).lcm(&(2 * *s.beta().denom()));
    let trunc = (q_orders + 2) * den;
    let max_order: i64 = form.poles().iter().map(|p| p.order as i64).max().unwrap_or(0);
    let len = (max_order as usize + 3).max(4);

    let mut acc = EpsSeries::from_taylor(
        {
            let mut v: Vec<QSeries> = (0..len).map(|_| QSeries::zero(den, trunc)).collect();
            v[0] = QSeries::monomial(den, 0, form.prefactor, trunc);
            v
        },
        len,
    );
    for f in &form.factors {
        let a = f.shift.alpha() + s.alpha();
        let b = f.shift.beta() + s.beta();
        let th = theta_eps_taylor(a, b, den, trunc, len);
        if f.exponent > 0 {
            for _ in 0..f.exponent {
                acc = acc.mul(&th, den, trunc);
            }
        } else {
            let inv = th.invert(den, trunc)?;
            for _ in 0..-f.exponent {
                acc = acc.mul(&inv, den, trunc);
            }
        }
    }
    // zeta^{-l} at z = z_s + eps: e(-l beta_s) q^{-l alpha_s} e(-l eps)
    let mut zeta_taylor: Vec<QSeries> = (0..len).map(|_| QSeries::zero(den, trunc)).collect();
    let w = Complex64::new(0.0, -2.0 * std::f64::consts::PI * ell as f64);
    let mut fac = Complex64::new(1.0, 0.0);
    for (mth, c) in zeta_taylor.iter_mut().enumerate() {
        *c = QSeries::monomial(den, 0, fac, trunc);
        fac *= w / (mth as f64 + 1.0);
    }
    acc = acc.mul(&EpsSeries::from_taylor(zeta_taylor, len), den, trunc);
    let res = acc.coeff_at(-1, den, trunc);

    let bs = *s.beta().numer() as f64 / *s.beta().denom() as f64;
    let phase = e2pi(Complex64::new(-(ell as f64) * bs, 0.0));
    let shift = Rational64::new(-ell * ell, 4 * m) - Rational64::from_integer(ell) * s.alpha();
    let mono = QSeries::monomial(den, rational_units(shift, den), phase, i64::MAX / 4);
    Ok(qs_mul(&res, &mono))
}
