//! The classical Jacobi theta function theta(z;tau) and the level-M theta
//! functions theta_{M,l}(z;tau).
//!
//! theta(z;tau) = sum_{nu in 1/2+Z} e^{pi i nu^2 tau + 2 pi i nu (z+1/2)},
//! theta_{M,l}(z;tau) = sum_{lambda = l mod 2M} q^{lambda^2/4M} zeta^lambda.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{e2pi, EllipticPoint, ModularPoint, Precision};

/// Index pair (M, l) with l a residue mod 2M.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThetaLevelIndex {
    m: u32,
    ell: i64,
}

impl ThetaLevelIndex {
    /// Normalizes l into [0, 2M).
    pub fn new(m: u32, ell: i64) -> Self {
        assert!(m > 0);
        let two_m = 2 * m as i64;
        Self { m, ell: ell.rem_euclid(two_m) }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn ell(&self) -> i64 {
        self.ell
    }
}

/// Smallest N with w N^2 - 2 lin N >= log(1/tol), plus margin. Gaussian tail
/// bound for sums with term magnitude exp(-w nu^2 + 2 lin |nu|).
fn gaussian_cutoff(w: f64, lin: f64, tol: f64) -> f64 {
    let l = (1.0 / tol).ln().max(1.0);
    let disc = (lin * lin + w * l).sqrt();
    (lin + disc) / w + 2.0
}

/// theta(z;tau), truncated symmetric sum over nu in 1/2+Z.
pub fn theta(z: EllipticPoint, tau: ModularPoint, p: Precision) -> Result<Complex64> {
    let v = tau.v();
    let y = z.y().abs();
    // term magnitude exp(-pi nu^2 v + 2 pi nu y)
    let cutoff = gaussian_cutoff(std::f64::consts::PI * v, std::f64::consts::PI * y, p.target_tol);
    let n_max = (cutoff.ceil() as usize).min(p.series_terms);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut last = 0.0_f64;
    for k in 0..=n_max as i64 {
        for nu in [k as f64 + 0.5, -(k as f64) - 0.5] {
            let term = (Complex64::new(0.0, std::f64::consts::PI) * (nu * nu) * tau.tau()
                + Complex64::new(0.0, 2.0 * std::f64::consts::PI) * nu * (z.z() + 0.5))
                .exp();
            acc += term;
            last = term.norm();
        }
    }
    if last > p.target_tol.max(1e-14) {
        return Err(Error::TruncationInsufficient { last, tol: p.target_tol });
    }
    Ok(acc)
}

/// Jacobi triple product form of theta:
/// i q^{1/8} (zeta^{1/2} - zeta^{-1/2}) prod (1-q^n)(1-zeta q^n)(1-zeta^{-1} q^n),
/// with zeta^{1/2} = e^{pi i z} on the principal branch. The sign is fixed by
/// matching the nu = -1/2, 1/2 terms of the defining series.
pub fn theta_triple_product(z: EllipticPoint, tau: ModularPoint, p: Precision) -> Result<Complex64> {
    let q = tau.q();
    let zeta = z.zeta();
    let zeta_half = (Complex64::new(0.0, std::f64::consts::PI) * z.z()).exp();
    // factors (1 - zeta^{+-1} q^n) approach 1 once |q|^n |zeta^{-+1}| << 1
    let v = tau.v();
    let ybound = z.y().abs();
    let n_max = (((1.0 / p.target_tol).ln() / (2.0 * std::f64::consts::PI * v) + ybound / v).ceil()
        as usize
        + 4)
        .max(6)
        .min(p.series_terms);
    let mut prod = Complex64::new(1.0, 0.0);
    let mut qn = Complex64::new(1.0, 0.0);
    let mut last = 0.0_f64;
    for _ in 1..=n_max {
        qn *= q;
        prod *= (1.0 - qn) * (1.0 - zeta * qn) * (1.0 - qn / zeta);
        last = qn.norm() * (1.0 + zeta.norm()).max(1.0 + 1.0 / zeta.norm());
    }
    if last > p.target_tol.max(1e-13) {
        return Err(Error::TruncationInsufficient { last, tol: p.target_tol });
    }
    Ok(Complex64::i() * tau.q_pow(1.0 / 8.0) * (zeta_half - 1.0 / zeta_half) * prod)
}

/// theta_{M,l}(z;tau), truncated sum over lambda = l mod 2M.
pub fn theta_level(
    idx: ThetaLevelIndex,
    z: EllipticPoint,
    tau: ModularPoint,
    p: Precision,
) -> Result<Complex64> {
    let two_m = 2 * idx.m() as i64;
    let m = idx.m() as f64;
    let v = tau.v();
    let y = z.y().abs();
    // term magnitude exp(-pi lambda^2 v / 2M + 2 pi lambda y)
    let cutoff = gaussian_cutoff(
        std::f64::consts::PI * v / (2.0 * m),
        std::f64::consts::PI * y,
        p.target_tol,
    );
    let lam_max = (cutoff.ceil() as i64).min(p.series_terms as i64 * two_m);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut last = 0.0_f64;
    let mut lam = idx.ell();
    while lam > -lam_max - two_m {
        lam -= two_m;
    }
    // lam is now below -lam_max; sum the residue class upward
    let mut l = lam;
    while l <= lam_max + two_m {
        let lf = l as f64;
        let term = tau.q_pow(lf * lf / (4.0 * m)) * e2pi(lf * z.z());
        acc += term;
        if l.abs() >= lam_max {
            last = last.max(term.norm());
        }
        l += two_m;
    }
    if last > p.target_tol.max(1e-13) {
        return Err(Error::TruncationInsufficient { last, tol: p.target_tol });
    }
    Ok(acc)
}

/// The 2M-vector (theta_{M,l})_{l mod 2M}.
pub fn theta_vector(
    m: u32,
    z: EllipticPoint,
    tau: ModularPoint,
    p: Precision,
) -> Result<Vec<Complex64>> {
    (0..2 * m as i64)
        .map(|ell| theta_level(ThetaLevelIndex::new(m, ell), z, tau, p))
        .collect()
}
