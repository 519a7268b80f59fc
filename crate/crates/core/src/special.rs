//! Scalar special functions: Legendre polynomials, associated Legendre
//! functions, spherical harmonics, Wigner d/D functions, Lambert W and
//! double factorials.
//!
//! All spherical harmonics carry the Condon-Shortley phase and are
//! normalized to unit L^2 norm with respect to the unnormalized surface
//! measure, so that `Y_0^0 = 1/sqrt(4*pi)`.

use crate::error::{CoreError, Result};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

const DOMAIN_SLACK: f64 = 1e-12;

/// Legendre polynomial P_n(t) via the stable three-term recurrence.
pub fn legendre_p(n: usize, t: f64) -> Result<f64> {
    check_unit_interval(t)?;
    Ok(legendre_p_unchecked(n, t.clamp(-1.0, 1.0)))
}

pub(crate) fn legendre_p_unchecked(n: usize, t: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => t,
        _ => {
            let mut p_prev = 1.0;
            let mut p_curr = t;
            for m in 2..=n {
                let mf = m as f64;
                let p_next = ((2.0 * mf - 1.0) * t * p_curr - (mf - 1.0) * p_prev) / mf;
                p_prev = p_curr;
                p_curr = p_next;
            }
            p_curr
        }
    }
}

/// Derivative P_n'(t); used by the Gauss-Legendre node solver.
pub fn legendre_p_derivative(n: usize, t: f64) -> Result<f64> {
    check_unit_interval(t)?;
    if n == 0 {
        return Ok(0.0);
    }
    let t = t.clamp(-1.0, 1.0);
    if (1.0 - t * t).abs() < 1e-14 {
        let sign: f64 = if t > 0.0 { 1.0 } else { -1.0 };
        let nf = n as f64;
        return Ok(sign.powi(n as i32 + 1) * nf * (nf + 1.0) / 2.0);
    }
    let pn = legendre_p_unchecked(n, t);
    let pn1 = legendre_p_unchecked(n - 1, t);
    Ok(n as f64 * (pn1 - t * pn) / (1.0 - t * t))
}

/// Associated Legendre function P_n^k(t) with the Condon-Shortley phase;
/// negative orders follow P_n^{-k} = (-1)^k (n-k)!/(n+k)! P_n^k.
pub fn assoc_legendre(n: usize, k: i64, t: f64) -> Result<f64> {
    check_order(n, k)?;
    check_unit_interval(t)?;
    let t = t.clamp(-1.0, 1.0);
    if k < 0 {
        let ka = (-k) as usize;
        let ratio = (ln_factorial(n - ka) - ln_factorial(n + ka)).exp();
        let sign = if ka.is_multiple_of(2) { 1.0 } else { -1.0 };
        return Ok(sign * ratio * assoc_legendre_nonneg(n, ka, t));
    }
    Ok(assoc_legendre_nonneg(n, k as usize, t))
}

fn assoc_legendre_nonneg(n: usize, k: usize, t: f64) -> f64 {
    // seed P_k^k = (-1)^k (2k-1)!! (1-t^2)^{k/2}, then upward in degree
    let s2 = (1.0 - t * t).max(0.0);
    let mut pkk = 1.0;
    for i in 1..=k {
        pkk *= -((2 * i - 1) as f64) * s2.sqrt();
    }
    if n == k {
        return pkk;
    }
    let kf = k as f64;
    let mut p_prev = pkk;
    let mut p_curr = t * (2.0 * kf + 1.0) * pkk;
    for m in (k + 2)..=n {
        let mf = m as f64;
        let p_next = ((2.0 * mf - 1.0) * t * p_curr - (mf + kf - 1.0) * p_prev) / (mf - kf);
        p_prev = p_curr;
        p_curr = p_next;
    }
    p_curr
}

/// Normalized associated Legendre N_n^k = sqrt((2n+1)/(4pi) (n-k)!/(n+k)!) P_n^k
/// for k >= 0, computed with an overflow-free normalized recurrence.
/// This is exactly the theta-part of the spherical harmonics.
pub(crate) fn norm_assoc_legendre(n: usize, k: usize, t: f64) -> f64 {
    debug_assert!(k <= n);
    let t = t.clamp(-1.0, 1.0);
    let s = (1.0 - t * t).max(0.0).sqrt();
    // diagonal start N_k^k
    let mut diag = 0.5 / PI.sqrt();
    for i in 1..=k {
        let i2 = 2.0 * i as f64;
        diag *= -((i2 + 1.0) / i2).sqrt() * s;
    }
    if n == k {
        return diag;
    }
    let mut prev = diag;
    let mut curr = t * ((2 * k + 3) as f64).sqrt() * diag;
    let mut a_prev = ((2 * k + 3) as f64).sqrt();
    for m in (k + 2)..=n {
        let mf = m as f64;
        let kf = k as f64;
        let a = ((4.0 * mf * mf - 1.0) / (mf * mf - kf * kf)).sqrt();
        let next = a * (t * curr - prev / a_prev);
        prev = curr;
        curr = next;
        a_prev = a;
    }
    curr
}

/// Builds the table N_n^k(t) for all 0 <= k <= n <= bandlimit at one point.
/// Entry layout: index = n*(n+1)/2 + k.
pub(crate) fn norm_assoc_legendre_table(bandlimit: usize, t: f64) -> Vec<f64> {
    let t = t.clamp(-1.0, 1.0);
    let s = (1.0 - t * t).max(0.0).sqrt();
    let len = (bandlimit + 1) * (bandlimit + 2) / 2;
    let mut out = vec![0.0; len];
    let idx = |n: usize, k: usize| n * (n + 1) / 2 + k;
    let mut diag = 0.5 / PI.sqrt();
    for k in 0..=bandlimit {
        if k > 0 {
            let k2 = 2.0 * k as f64;
            diag *= -((k2 + 1.0) / k2).sqrt() * s;
        }
        out[idx(k, k)] = diag;
        if k < bandlimit {
            out[idx(k + 1, k)] = t * ((2 * k + 3) as f64).sqrt() * diag;
        }
        let kf = k as f64;
        let mut a_prev = ((2 * k + 3) as f64).sqrt();
        for n in (k + 2)..=bandlimit {
            let nf = n as f64;
            let a = ((4.0 * nf * nf - 1.0) / (nf * nf - kf * kf)).sqrt();
            out[idx(n, k)] = a * (t * out[idx(n - 1, k)] - out[idx(n - 2, k)] / a_prev);
            a_prev = a;
        }
    }
    out
}

/// Spherical harmonic Y_n^k at spherical coordinates (phi, theta).
pub fn sph_harmonic(n: usize, k: i64, phi: f64, theta: f64) -> Result<Complex64> {
    check_order(n, k)?;
    let ka = k.unsigned_abs() as usize;
    let base = norm_assoc_legendre(n, ka, theta.cos());
    let sign = if k < 0 && ka % 2 == 1 { -1.0 } else { 1.0 };
    Ok(sign * base * Complex64::from_polar(1.0, k as f64 * phi))
}

/// Wigner d-function d_n^{k,j}(t), t = cos(beta), evaluated through the
/// Jacobi-polynomial representation. The endpoint values t = +-1 come out
/// as the exact Kronecker-delta limits because the half-angle factors
/// vanish analytically.
pub fn wigner_d(n: usize, k: i64, j: i64, t: f64) -> Result<f64> {
    check_order(n, k)?;
    check_order(n, j)?;
    check_unit_interval(t)?;
    Ok(wigner_d_unchecked(n, k, j, t.clamp(-1.0, 1.0)))
}

pub(crate) fn wigner_d_unchecked(n: usize, k: i64, j: i64, t: f64) -> f64 {
    // Map (k, j) into the region j' >= |k'| with
    // d_n^{k,j} = (-1)^{k-j} d_n^{j,k} = d_n^{-j,-k}.
    let (kk, jj, sign) = if j >= k.abs() {
        (k, j, 1.0)
    } else if -k >= j.abs() {
        (-j, -k, 1.0)
    } else if k >= j.abs() {
        (j, k, neg_pow(k - j))
    } else {
        (-k, -j, neg_pow(k - j))
    };
    debug_assert!(jj >= kk.abs());
    let nf = n as i64;
    let a = (jj - kk) as u32; // exponent of sin(beta/2)
    let b = (jj + kk) as u32; // exponent of cos(beta/2)
    let s = (nf - jj) as usize; // Jacobi degree
    let half = 0.5
        * (ln_factorial((nf + jj) as usize) + ln_factorial((nf - jj) as usize)
            - ln_factorial((nf + kk) as usize)
            - ln_factorial((nf - kk) as usize));
    let sin_h2 = ((1.0 - t) * 0.5).max(0.0);
    let cos_h2 = ((1.0 + t) * 0.5).max(0.0);
    let angular = sin_h2.powf(a as f64 * 0.5) * cos_h2.powf(b as f64 * 0.5);
    sign * half.exp() * angular * jacobi_p(s, a as f64, b as f64, t)
}

fn neg_pow(e: i64) -> f64 {
    if e.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Jacobi polynomial P_s^{(a,b)}(x) by the standard three-term recurrence.
fn jacobi_p(s: usize, a: f64, b: f64, x: f64) -> f64 {
    if s == 0 {
        return 1.0;
    }
    let mut p_prev = 1.0;
    let mut p_curr = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * x;
    for m in 2..=s {
        let mf = m as f64;
        let c = 2.0 * mf + a + b;
        let a1 = 2.0 * mf * (mf + a + b) * (c - 2.0);
        let a2 = (c - 1.0) * (a * a - b * b);
        let a3 = (c - 2.0) * (c - 1.0) * c;
        let a4 = 2.0 * (mf + a - 1.0) * (mf + b - 1.0) * c;
        let p_next = ((a2 + a3 * x) * p_curr - a4 * p_prev) / a1;
        p_prev = p_curr;
        p_curr = p_next;
    }
    p_curr
}

/// Wigner D-function D_n^{k,j}(alpha,beta,gamma) = e^{-ik alpha} d_n^{k,j}(cos beta) e^{-ij gamma}.
pub fn wigner_big_d(
    n: usize,
    k: i64,
    j: i64,
    alpha: f64,
    beta: f64,
    gamma: f64,
) -> Result<Complex64> {
    let d = wigner_d(n, k, j, beta.cos())?;
    let phase = Complex64::from_polar(1.0, -(k as f64) * alpha - (j as f64) * gamma);
    Ok(d * phase)
}

/// Principal-branch Lambert W on the nonnegative reals: the y with y e^y = z.
pub fn lambert_w(z: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(CoreError::domain(format!(
            "lambert_w requires z >= 0, got {z}"
        )));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    let mut y = if z < 1.0 {
        z
    } else if z < std::f64::consts::E {
        (1.0 + z).ln()
    } else {
        let l = z.ln();
        l - l.ln()
    };
    // Halley iteration; quadratic basin is generous on z >= 0
    for _ in 0..60 {
        let ey = y.exp();
        let f = y * ey - z;
        if f.abs() <= 1e-16 * z.max(1.0) {
            break;
        }
        let denom = ey * (y + 1.0) - (y + 2.0) * f / (2.0 * y + 2.0);
        let step = f / denom;
        y -= step;
        if step.abs() <= 1e-16 * y.abs().max(1.0) {
            break;
        }
    }
    Ok(y)
}

/// W(e^u) for real u, stable for arguments whose exponential overflows.
/// Above the overflow guard it solves w + ln w = u directly.
pub fn lambert_w_exp(u: f64) -> f64 {
    if u <= 700.0 {
        return lambert_w(u.exp()).expect("exp(u) >= 0");
    }
    let mut w = u - u.ln();
    for _ in 0..20 {
        // Newton on g(w) = w + ln w - u
        let step = (u - w - w.ln()) * w / (w + 1.0);
        w += step;
        if step.abs() <= 1e-14 * w {
            break;
        }
    }
    w
}

/// Double factorial m!! with (-1)!! = 0!! = 1, as f64 (exact up to m = 25).
pub fn double_factorial(m: i64) -> Result<f64> {
    if m < -1 {
        return Err(CoreError::domain(format!(
            "double factorial needs m >= -1, got {m}"
        )));
    }
    let mut acc = 1.0;
    let mut v = m;
    while v > 1 {
        acc *= v as f64;
        v -= 2;
    }
    Ok(acc)
}

/// ln(m!!) for m >= -1; log-space companion of `double_factorial`.
pub fn ln_double_factorial(m: i64) -> Result<f64> {
    if m < -1 {
        return Err(CoreError::domain(format!(
            "double factorial needs m >= -1, got {m}"
        )));
    }
    if m <= 1 {
        return Ok(0.0);
    }
    let m = m as usize;
    if m.is_multiple_of(2) {
        let q = m / 2;
        Ok(q as f64 * std::f64::consts::LN_2 + ln_factorial(q))
    } else {
        let q = (m - 1) / 2;
        Ok(ln_factorial(m) - (q as f64 * std::f64::consts::LN_2 + ln_factorial(q)))
    }
}

const LN_FACTORIAL_TABLE_LEN: usize = 512;

/// ln(m!) from a lazily built cumulative table (m < 512), else by summation.
pub fn ln_factorial(m: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = vec![0.0; LN_FACTORIAL_TABLE_LEN];
        let mut acc = 0.0;
        for i in 1..LN_FACTORIAL_TABLE_LEN {
            acc += (i as f64).ln();
            t[i] = acc;
        }
        t
    });
    if m < table.len() {
        table[m]
    } else {
        let mut acc = table[table.len() - 1];
        for i in table.len()..=m {
            acc += (i as f64).ln();
        }
        acc
    }
}

fn check_unit_interval(t: f64) -> Result<()> {
    if t.abs() > 1.0 + DOMAIN_SLACK || t.is_nan() {
        return Err(CoreError::domain(format!("argument {t} outside [-1, 1]")));
    }
    Ok(())
}

fn check_order(n: usize, k: i64) -> Result<()> {
    if k.unsigned_abs() as usize > n {
        return Err(CoreError::index(format!("order |{k}| exceeds degree {n}")));
    }
    Ok(())
}
