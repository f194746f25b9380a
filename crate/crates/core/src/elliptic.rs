//! Complete and incomplete elliptic integrals and the Jacobi elliptic functions.
//!
//! Every function takes the *parameter* `m = k²` (not the modulus `k`). With this
//! convention `sn(u, 0) = sin u` and `sn(u, 1) = tanh u`.
//!
//! * `K(m)` and `E(m)` use the arithmetic-geometric mean.
//! * `E(φ, m)` uses Carlson's symmetric forms `R_F` and `R_D` on the principal
//!   interval `[-π/2, π/2]` and the quasi-periodicity `E(φ + π) = E(φ) + 2E(m)`
//!   outside of it.
//! * `sn`, `cn`, `dn` use descending Landen (AGM) iteration on `u` reduced to
//!   `[-K, K)`. The amplitude returned alongside them is continuous in `u`:
//!   `am(u + 2K) = am(u) + π`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters at or above this value are evaluated with the `m = 1` hyperbolic
/// limit formulas.
pub const HYPERBOLIC_THRESHOLD: f64 = 1.0 - 1e-12;

const AGM_MAX_ITER: usize = 64;

/// `(sn, cn, dn)` at some `(u, m)` together with the continuous amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticTriple {
    pub sn: f64,
    pub cn: f64,
    pub dn: f64,
    /// Continuous Jacobi amplitude, `sn = sin(am)` and `cn = cos(am)`.
    pub am: f64,
    /// Set when `m` was close enough to 1 that the hyperbolic limit was used.
    pub hyperbolic: bool,
}

fn check_parameter(m: f64, upper_inclusive: bool) -> Result<()> {
    let ok = m.is_finite() && m >= 0.0 && if upper_inclusive { m <= 1.0 } else { m < 1.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "elliptic parameter m",
            value: m,
            expected: if upper_inclusive { "0 <= m <= 1" } else { "0 <= m < 1" },
        })
    }
}

/// Complete elliptic integral of the first kind `K(m)`, `0 <= m < 1`.
pub fn ellip_k(m: f64) -> Result<f64> {
    check_parameter(m, false)?;
    Ok(k_unchecked(m))
}

pub(crate) fn k_unchecked(m: f64) -> f64 {
    if m >= 1.0 {
        return f64::INFINITY;
    }
    let mut a = 1.0_f64;
    let mut b = (1.0 - m).sqrt();
    for _ in 0..AGM_MAX_ITER {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    PI / (2.0 * a)
}

/// Complete elliptic integral of the second kind `E(m)`, `0 <= m <= 1`.
pub fn ellip_e_complete(m: f64) -> Result<f64> {
    check_parameter(m, true)?;
    Ok(e_complete_unchecked(m))
}

pub(crate) fn e_complete_unchecked(m: f64) -> f64 {
    if m >= 1.0 {
        return 1.0;
    }
    // E = K (1 - sum_n 2^(n-1) c_n^2) with c_0 = sqrt(m).
    let mut a = 1.0_f64;
    let mut b = (1.0 - m).sqrt();
    let mut c = m.sqrt();
    let mut weight = 0.5;
    let mut sum = weight * c * c;
    for _ in 0..AGM_MAX_ITER {
        if c.abs() <= 1e-17 * a {
            break;
        }
        let an = 0.5 * (a + b);
        c = c * c / (4.0 * an);
        b = (a * b).sqrt();
        a = an;
        weight *= 2.0;
        sum += weight * c * c;
    }
    PI / (2.0 * a) * (1.0 - sum)
}

/// Carlson's symmetric integral of the first kind `R_F(x, y, z)`.
fn carlson_rf(mut x: f64, mut y: f64, mut z: f64) -> f64 {
    const ERRTOL: f64 = 0.0008;
    loop {
        let mean = (x + y + z) / 3.0;
        let dx = (mean - x) / mean;
        let dy = (mean - y) / mean;
        let dz = (mean - z) / mean;
        if dx.abs().max(dy.abs()).max(dz.abs()) < ERRTOL {
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            return (1.0 + (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) * e2 + e3 / 14.0) / mean.sqrt();
        }
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
    }
}

/// Carlson's degenerate integral of the second kind `R_D(x, y, z)`.
fn carlson_rd(mut x: f64, mut y: f64, mut z: f64) -> f64 {
    const ERRTOL: f64 = 0.0005;
    let mut sum = 0.0;
    let mut fac = 1.0;
    loop {
        let mean = 0.2 * (x + y + 3.0 * z);
        let dx = (mean - x) / mean;
        let dy = (mean - y) / mean;
        let dz = (mean - z) / mean;
        if dx.abs().max(dy.abs()).max(dz.abs()) < ERRTOL {
            let ea = dx * dy;
            let eb = dz * dz;
            let ec = ea - eb;
            let ed = ea - 6.0 * eb;
            let ee = ed + ec + ec;
            let c1 = 3.0 / 14.0;
            let c2 = 1.0 / 6.0;
            let c3 = 9.0 / 22.0;
            let c4 = 3.0 / 26.0;
            let c5 = 0.25 * c3;
            let c6 = 1.5 * c4;
            let series = 1.0 + ed * (-c1 + c5 * ed - c6 * dz * ee) + dz * (c2 * ee + dz * (-c3 * ec + dz * c4 * ea));
            return 3.0 * sum + fac * series / (mean * mean.sqrt());
        }
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        sum += fac / (sz * (z + lambda));
        fac *= 0.25;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
    }
}

/// `E(φ, m)` for `φ` in `[-π/2, π/2]`.
fn e_principal(phi: f64, m: f64) -> f64 {
    let s = phi.sin();
    if m == 0.0 {
        return phi;
    }
    if m >= 1.0 {
        return s;
    }
    let c = phi.cos();
    let c2 = c * c;
    let s2 = s * s;
    let delta = c2 + (1.0 - m) * s2;
    s * carlson_rf(c2, delta, 1.0) - m / 3.0 * s * s2 * carlson_rd(c2, delta, 1.0)
}

/// Incomplete elliptic integral of the second kind
/// `E(φ, m) = ∫₀^φ √(1 − m sin²θ) dθ` for any finite `φ`, `0 <= m <= 1`.
pub fn ellip_e_incomplete(phi: f64, m: f64) -> Result<f64> {
    check_parameter(m, true)?;
    if !phi.is_finite() {
        return Err(Error::Domain { what: "amplitude phi", value: phi, expected: "finite" });
    }
    let j = (phi / PI).round();
    let reduced = phi - j * PI;
    let base = if j == 0.0 { 0.0 } else { 2.0 * j * e_complete_unchecked(m) };
    Ok(base + e_principal(reduced, m))
}

/// Amplitude on `[-K, K]` by descending Landen transformation.
fn amplitude_principal(u: f64, m: f64) -> f64 {
    if m == 0.0 {
        return u;
    }
    let mut a = [0.0_f64; AGM_MAX_ITER + 1];
    let mut c = [0.0_f64; AGM_MAX_ITER + 1];
    a[0] = 1.0;
    let mut b = (1.0 - m).sqrt();
    c[0] = m.sqrt();
    let mut n = 0;
    while n < AGM_MAX_ITER && c[n].abs() > 1e-16 * a[n] {
        a[n + 1] = 0.5 * (a[n] + b);
        c[n + 1] = c[n] * c[n] / (4.0 * a[n + 1]);
        b = (a[n] * b).sqrt();
        n += 1;
    }
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    for i in (1..=n).rev() {
        phi = 0.5 * (phi + (c[i] / a[i] * phi.sin()).asin());
    }
    phi
}

pub(crate) fn jacobi_unchecked(u: f64, m: f64) -> EllipticTriple {
    if m >= HYPERBOLIC_THRESHOLD {
        let sech = 1.0 / u.cosh();
        return EllipticTriple { sn: u.tanh(), cn: sech, dn: sech, am: u.sinh().atan(), hyperbolic: true };
    }
    let k = k_unchecked(m);
    let periods = ((u + k) / (2.0 * k)).floor();
    let reduced = u - 2.0 * periods * k;
    let phi = amplitude_principal(reduced, m);
    let sign = if periods.rem_euclid(2.0) == 0.0 { 1.0 } else { -1.0 };
    let sn = sign * phi.sin();
    let cn = sign * phi.cos();
    let dn = (cn * cn + (1.0 - m) * sn * sn).sqrt();
    EllipticTriple { sn, cn, dn, am: periods * PI + phi, hyperbolic: false }
}

/// Jacobi elliptic functions `sn`, `cn`, `dn` and the continuous amplitude.
pub fn jacobi(u: f64, m: f64) -> Result<EllipticTriple> {
    check_parameter(m, true)?;
    if !u.is_finite() {
        return Err(Error::Domain { what: "argument u", value: u, expected: "finite" });
    }
    Ok(jacobi_unchecked(u, m))
}

pub(crate) fn epsilon_unchecked(u: f64, m: f64) -> f64 {
    if m >= HYPERBOLIC_THRESHOLD {
        return u.tanh();
    }
    let k = k_unchecked(m);
    let periods = ((u + k) / (2.0 * k)).floor();
    let reduced = u - 2.0 * periods * k;
    let phi = amplitude_principal(reduced, m).clamp(-FRAC_PI_2, FRAC_PI_2);
    let base = if periods == 0.0 { 0.0 } else { 2.0 * periods * e_complete_unchecked(m) };
    base + e_principal(phi, m)
}

/// Jacobi epsilon `E(am(u, m), m)`, the antiderivative of `dn²(u, m)`, with the
/// continuous amplitude. Requires `0 <= m < 1`.
pub fn jacobi_epsilon(u: f64, m: f64) -> Result<f64> {
    check_parameter(m, false)?;
    if !u.is_finite() {
        return Err(Error::Domain { what: "argument u", value: u, expected: "finite" });
    }
    Ok(epsilon_unchecked(u, m))
}
