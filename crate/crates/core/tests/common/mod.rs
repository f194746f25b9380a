//! Reference values computed without the library's elliptic code: adaptive
//! Gauss–Kronrod quadrature, power series, nome series and amplitude inversion.

#![allow(dead_code, clippy::excessive_precision)]

use std::f64::consts::{FRAC_PI_2, PI};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, density: f64, depth: u32) -> f64 {
    let (val, err) = gk15(f, a, b);
    if err <= density * (b - a).abs() || err <= 1e-16 * val.abs() || depth == 0 {
        return val;
    }
    let c = 0.5 * (a + b);
    adapt(f, a, c, density, depth - 1) + adapt(f, c, b, density, depth - 1)
}

/// `∫ₐᵇ f` with an error budget of `density` per unit length.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, density: f64) -> f64 {
    adapt(&f, a, b, density, 30)
}

const QTOL: f64 = 1e-15;

pub fn quad_f(phi: f64, m: f64) -> f64 {
    integrate(|t| 1.0 / (1.0 - m * t.sin().powi(2)).sqrt(), 0.0, phi, QTOL)
}

pub fn quad_e(phi: f64, m: f64) -> f64 {
    integrate(|t| (1.0 - m * t.sin().powi(2)).sqrt(), 0.0, phi, QTOL)
}

pub fn quad_k(m: f64) -> f64 {
    quad_f(FRAC_PI_2, m)
}

pub fn quad_e_complete(m: f64) -> f64 {
    quad_e(FRAC_PI_2, m)
}

/// Power series `K = π/2 Σ c_n² mⁿ`, `c_n = (2n−1)!!/(2n)!!`.
pub fn series_k(m: f64) -> f64 {
    let (mut c, mut mn, mut sum) = (1.0_f64, 1.0_f64, 0.0_f64);
    for n in 0..100_000 {
        let term = c * c * mn;
        sum += term;
        if term < 1e-18 {
            break;
        }
        let n = n as f64;
        c *= (2.0 * n + 1.0) / (2.0 * n + 2.0);
        mn *= m;
    }
    FRAC_PI_2 * sum
}

/// Power series `E = π/2 (1 − Σₙ≥₁ c_n² mⁿ/(2n−1))`.
pub fn series_e(m: f64) -> f64 {
    let (mut c, mut mn, mut sum) = (0.5_f64, m, 0.0_f64);
    for n in 1..100_000 {
        let n = n as f64;
        let term = c * c * mn / (2.0 * n - 1.0);
        sum += term;
        if term < 1e-18 {
            break;
        }
        c *= (2.0 * n + 1.0) / (2.0 * n + 2.0);
        mn *= m;
    }
    FRAC_PI_2 * (1.0 - sum)
}

/// Amplitude by inverting `F(φ, m) = u` with bracketed Newton steps.
pub fn am_by_inversion(u: f64, m: f64) -> f64 {
    let k = quad_k(m);
    let periods = (u / (2.0 * k)).round();
    let r = u - 2.0 * k * periods;
    let (mut lo, mut hi) = (-FRAC_PI_2, FRAC_PI_2);
    let mut phi = r * FRAC_PI_2 / k;
    for _ in 0..200 {
        let g = quad_f(phi, m) - r;
        if g.abs() < 1e-15 {
            break;
        }
        if g > 0.0 {
            hi = phi;
        } else {
            lo = phi;
        }
        let next = phi - g * (1.0 - m * phi.sin().powi(2)).sqrt();
        phi = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-16 {
            break;
        }
    }
    phi + PI * periods
}

/// `(sn, cn, dn)` from the inverted amplitude.
pub fn jacobi_by_inversion(u: f64, m: f64) -> [f64; 3] {
    let phi = am_by_inversion(u, m);
    [phi.sin(), phi.cos(), (1.0 - m * phi.sin().powi(2)).sqrt()]
}

/// `(sn, cn, dn)` from the nome (Fourier) series, `0 < m < 1`.
pub fn jacobi_by_nome(u: f64, m: f64) -> [f64; 3] {
    let k = series_k(m);
    let kp = series_k(1.0 - m);
    let q = (-PI * kp / k).exp();
    let v = PI * u / (2.0 * k);
    let (mut sn, mut cn, mut dn) = (0.0, 0.0, 0.0);
    for n in 0..200 {
        let odd = (2 * n + 1) as f64;
        let qh = q.powf(n as f64 + 0.5);
        let qo = q.powf(odd);
        sn += qh / (1.0 - qo) * (odd * v).sin();
        cn += qh / (1.0 + qo) * (odd * v).cos();
        if n >= 1 {
            let qn = q.powi(n);
            dn += qn / (1.0 + qn * qn) * (2.0 * n as f64 * v).cos();
        }
        if qh < 1e-20 {
            break;
        }
    }
    let scale = 2.0 * PI / (k * m.sqrt());
    [scale * sn, scale * cn, PI / (2.0 * k) + 2.0 * PI / k * dn]
}

/// `E(am(u, m), m)` from the inverted amplitude.
pub fn epsilon_by_quadrature(u: f64, m: f64) -> f64 {
    quad_e(am_by_inversion(u, m), m)
}

/// Composite Simpson over equispaced samples; needs an odd count.
pub fn simpson(f: &[f64]) -> f64 {
    assert!(f.len() >= 3 && f.len() % 2 == 1);
    let h = 1.0 / (f.len() - 1) as f64;
    let n = f.len() - 1;
    let mut s = f[0] + f[n];
    for (i, v) in f.iter().enumerate().take(n).skip(1) {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * v;
    }
    s * h / 3.0
}

/// Classical RK4 for `ẏ = f(τ, y)` on `[0, 1]`.
pub fn rk4<const N: usize>(f: impl Fn(f64, &[f64; N]) -> [f64; N], y0: [f64; N], steps: usize) -> [f64; N] {
    let h = 1.0 / steps as f64;
    let mut y = y0;
    let axpy = |y: &[f64; N], k: &[f64; N], a: f64| -> [f64; N] { std::array::from_fn(|i| y[i] + a * k[i]) };
    for i in 0..steps {
        let t = i as f64 * h;
        let k1 = f(t, &y);
        let k2 = f(t + 0.5 * h, &axpy(&y, &k1, 0.5 * h));
        let k3 = f(t + 0.5 * h, &axpy(&y, &k2, 0.5 * h));
        let k4 = f(t + h, &axpy(&y, &k3, h));
        y = std::array::from_fn(|j| y[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]));
    }
    y
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}
