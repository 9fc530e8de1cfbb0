//! Special functions and closed-form volumes of spheres, projective spaces,
//! orthogonal/unitary groups, Stiefel manifolds and Grassmannians.
//!
//! Volumes use the canonical Riemannian metrics (the ones for which the
//! quotient maps `O(n) -> G(k,n)` and `O(m) -> S(k,m)` are Riemannian
//! submersions). Every volume has a `log_*` twin returning a [`LogValue`];
//! the direct form is just its exponential.

use std::f64::consts::{LN_2, PI};
use std::ops::{Div, Mul};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

const LN_PI: f64 = 1.144_729_885_849_400_2;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Natural logarithm of a positive quantity.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LogValue {
    pub log_magnitude: f64,
}

impl LogValue {
    pub const ONE: LogValue = LogValue { log_magnitude: 0.0 };

    pub fn new(log_magnitude: f64) -> Self {
        LogValue { log_magnitude }
    }

    pub fn from_value(x: f64) -> Self {
        debug_assert!(x > 0.0);
        LogValue {
            log_magnitude: x.ln(),
        }
    }

    pub fn ln(self) -> f64 {
        self.log_magnitude
    }

    pub fn exp(self) -> f64 {
        self.log_magnitude.exp()
    }

    pub fn powf(self, p: f64) -> Self {
        LogValue::new(self.log_magnitude * p)
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: LogValue) -> LogValue {
        LogValue::new(self.log_magnitude + rhs.log_magnitude)
    }
}

impl Div for LogValue {
    type Output = LogValue;
    fn div(self, rhs: LogValue) -> LogValue {
        LogValue::new(self.log_magnitude - rhs.log_magnitude)
    }
}

// Lanczos approximation, g = 7, n = 9 (Godfrey's coefficients).
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("log_gamma", format!("x = {x} must be positive and finite")));
    }
    Ok(log_gamma_unchecked(x))
}

pub(crate) fn log_gamma_unchecked(x: f64) -> f64 {
    if x >= 15.0 {
        // Stirling series; the first omitted term is below 1e-15 relative here.
        let inv = 1.0 / x;
        let inv2 = inv * inv;
        let series = inv
            * (1.0 / 12.0
                - inv2
                    * (1.0 / 360.0
                        - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
        (x - 0.5) * x.ln() - x + LN_SQRT_2PI + series
    } else if x < 0.5 {
        // Reflection keeps the Lanczos sum in its accurate range.
        (PI / (PI * x).sin()).ln() - log_gamma_unchecked(1.0 - x)
    } else {
        let z = x - 1.0;
        let mut acc = LANCZOS[0];
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (z + i as f64);
        }
        let t = z + LANCZOS_G + 0.5;
        LN_SQRT_2PI + (z + 0.5) * t.ln() - t + acc.ln()
    }
}

/// `ln Γ_k(a)` of the multivariate Gamma function, via the product
/// `π^{k(k-1)/4} Γ(a) Γ(a-1/2) ... Γ(a-(k-1)/2)`.
pub fn multivariate_gamma_log(k: usize, a: f64) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    if !(a > (k as f64 - 1.0) / 2.0) {
        return Err(domain(
            "multivariate_gamma_log",
            format!("a = {a} must exceed (k-1)/2 = {}", (k as f64 - 1.0) / 2.0),
        ));
    }
    let mut acc = (k * (k - 1)) as f64 / 4.0 * LN_PI;
    for j in 0..k {
        acc += log_gamma_unchecked(a - j as f64 / 2.0);
    }
    Ok(acc)
}

/// `ρ_k = E‖X‖` for a standard Gaussian `X ∈ R^k`.
pub fn rho(k: usize) -> f64 {
    assert!(k >= 1, "rho(k) needs k >= 1");
    log_rho(k).exp()
}

pub fn log_rho(k: usize) -> f64 {
    0.5 * LN_2 + log_gamma_unchecked((k as f64 + 1.0) / 2.0) - log_gamma_unchecked(k as f64 / 2.0)
}

const AGM_TOL: f64 = 1e-14;
const AGM_MAX_ITER: usize = 40;

/// Complete elliptic integral of the second kind,
/// `E(s) = ∫_0^{π/2} sqrt(1 - s sin²t) dt`, parameter convention `s = k²`.
pub fn elliptic_e(s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(domain("elliptic_e", format!("s = {s} outside [0, 1]")));
    }
    if s == 1.0 {
        return Ok(1.0);
    }
    let (k, sum) = agm_k_and_sum(s)?;
    Ok(k * (1.0 - sum))
}

/// Complete elliptic integral of the first kind,
/// `K(s) = ∫_0^{π/2} (1 - s sin²t)^{-1/2} dt`.
pub fn elliptic_k(s: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&s) {
        return Err(domain("elliptic_k", format!("s = {s} outside [0, 1)")));
    }
    Ok(agm_k_and_sum(s)?.0)
}

/// `D(s) = (K(s) - E(s)) / s = ∫_0^{π/2} sin²t (1 - s sin²t)^{-1/2} dt`.
///
/// Evaluated by its power series for small `s`, where the difference
/// `K - E` cancels badly. Note `E'(s) = -D(s) / 2`.
pub fn elliptic_d(s: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&s) {
        return Err(domain("elliptic_d", format!("s = {s} outside [0, 1)")));
    }
    if s < 0.25 {
        let mut a = 1.0; // (2j-1)!!/(2j)!!
        let mut b = 0.5; // (2j+1)!!/(2j+2)!!
        let mut pow = 1.0;
        let mut acc = 0.0;
        for j in 0..200 {
            let term = a * b * pow;
            acc += term;
            if term < 1e-17 * acc {
                break;
            }
            let jf = j as f64;
            a *= (2.0 * jf + 1.0) / (2.0 * jf + 2.0);
            b *= (2.0 * jf + 3.0) / (2.0 * jf + 4.0);
            pow *= s;
        }
        Ok(acc * PI / 2.0)
    } else {
        let (k, sum) = agm_k_and_sum(s)?;
        Ok(k * sum / s)
    }
}

/// Returns `K(s)` and `Σ 2^{n-1} c_n²` from the AGM iteration, so that
/// `E = K (1 - sum)`.
fn agm_k_and_sum(s: f64) -> Result<(f64, f64)> {
    let mut a = 1.0_f64;
    let mut b = (1.0 - s).sqrt();
    let mut sum = 0.5 * s;
    let mut pow = 0.5;
    for _ in 0..AGM_MAX_ITER {
        if (a - b).abs() <= AGM_TOL * a {
            return Ok((PI / (2.0 * a), sum));
        }
        let c = 0.5 * (a - b);
        let a_next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = a_next;
        pow *= 2.0;
        sum += pow * c * c;
    }
    Err(Error::Numerical(format!("AGM did not converge for s = {s}")))
}

/// `|S^d|`, the volume of the unit sphere in `R^{d+1}`.
pub fn log_vol_sphere(d: usize) -> LogValue {
    let h = (d as f64 + 1.0) / 2.0;
    LogValue::new(LN_2 + h * LN_PI - log_gamma_unchecked(h))
}

pub fn vol_sphere(d: usize) -> f64 {
    log_vol_sphere(d).exp()
}

/// `|RP^d| = |S^d| / 2`.
pub fn log_vol_rp(d: usize) -> LogValue {
    LogValue::new(log_vol_sphere(d).ln() - LN_2)
}

pub fn vol_rp(d: usize) -> f64 {
    log_vol_rp(d).exp()
}

/// `|CP^d| = π^d / d!` (Fubini–Study).
pub fn log_vol_cp(d: usize) -> LogValue {
    LogValue::new(d as f64 * LN_PI - log_gamma_unchecked(d as f64 + 1.0))
}

pub fn vol_cp(d: usize) -> f64 {
    log_vol_cp(d).exp()
}

/// `|O(k)| = 2^k π^{k²/2} / Γ_k(k/2)`; `|O(0)| = 1`.
pub fn log_vol_orthogonal(k: usize) -> LogValue {
    if k == 0 {
        return LogValue::ONE;
    }
    let kf = k as f64;
    let gk = multivariate_gamma_log(k, kf / 2.0).expect("k/2 > (k-1)/2");
    LogValue::new(kf * LN_2 + kf * kf / 2.0 * LN_PI - gk)
}

pub fn vol_orthogonal(k: usize) -> f64 {
    log_vol_orthogonal(k).exp()
}

/// `|S(k,m)| = 2^k π^{km/2} / Γ_k(m/2)` for the Stiefel manifold of
/// orthonormal `k`-frames in `R^m`.
pub fn log_vol_stiefel(k: usize, m: usize) -> Result<LogValue> {
    if k > m {
        return Err(Error::Dimension(format!("Stiefel S({k},{m}) needs k <= m")));
    }
    if k == 0 {
        return Ok(LogValue::ONE);
    }
    let (kf, mf) = (k as f64, m as f64);
    let gk = multivariate_gamma_log(k, mf / 2.0)?;
    Ok(LogValue::new(kf * LN_2 + kf * mf / 2.0 * LN_PI - gk))
}

pub fn vol_stiefel(k: usize, m: usize) -> Result<f64> {
    Ok(log_vol_stiefel(k, m)?.exp())
}

fn log_factorial(i: usize) -> f64 {
    log_gamma_unchecked(i as f64 + 1.0)
}

/// `|U(k)| = 2^k π^{(k²+k)/2} / Π_{i=1}^{k-1} i!`.
pub fn log_vol_unitary(k: usize) -> LogValue {
    let kf = k as f64;
    let denom: f64 = (1..k).map(log_factorial).sum();
    LogValue::new(kf * LN_2 + (kf * kf + kf) / 2.0 * LN_PI - denom)
}

pub fn vol_unitary(k: usize) -> f64 {
    log_vol_unitary(k).exp()
}

fn check_kn(k: usize, n: usize) -> Result<()> {
    if k > n || n == 0 {
        return Err(Error::Dimension(format!("G({k},{n}) needs k <= n, n >= 1")));
    }
    Ok(())
}

/// `|G(k,n)| = |O(n)| / (|O(k)| |O(n-k)|)`.
pub fn log_vol_grassmann_real(k: usize, n: usize) -> Result<LogValue> {
    check_kn(k, n)?;
    Ok(log_vol_orthogonal(n) / (log_vol_orthogonal(k) * log_vol_orthogonal(n - k)))
}

pub fn vol_grassmann_real(k: usize, n: usize) -> Result<f64> {
    Ok(log_vol_grassmann_real(k, n)?.exp())
}

/// `|G_C(k,n)| = |U(n)| / (|U(k)| |U(n-k)|)`.
pub fn log_vol_grassmann_complex(k: usize, n: usize) -> Result<LogValue> {
    check_kn(k, n)?;
    Ok(log_vol_unitary(n) / (log_vol_unitary(k) * log_vol_unitary(n - k)))
}

pub fn vol_grassmann_complex(k: usize, n: usize) -> Result<f64> {
    Ok(log_vol_grassmann_complex(k, n)?.exp())
}

fn big_factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// Degree of the complex Grassmannian `G_C(k,n)` in its Plücker embedding:
/// `0!1!...(k-1)! / ((n-k)!...(n-1)!) · (k(n-k))!`, exact.
pub fn deg_grassmann_complex(k: usize, n: usize) -> Result<BigUint> {
    if k == 0 || k > n {
        return Err(Error::Dimension(format!("deg G_C({k},{n}) needs 1 <= k <= n")));
    }
    let big_n = k * (n - k);
    let num = (0..k).fold(big_factorial(big_n), |acc, i| acc * big_factorial(i));
    let den = (n - k..n).fold(BigUint::one(), |acc, j| acc * big_factorial(j));
    debug_assert!((&num % &den) == BigUint::from(0u32));
    Ok(num / den)
}

/// Same as [`deg_grassmann_complex`] but as a machine integer; signals
/// [`Error::Overflow`] when the degree does not fit in a `u64`.
pub fn deg_grassmann_complex_u64(k: usize, n: usize) -> Result<u64> {
    deg_grassmann_complex(k, n)?
        .to_u64()
        .ok_or_else(|| Error::Overflow(format!("deg G_C({k},{n}) exceeds u64")))
}

pub fn log_deg_grassmann_complex(k: usize, n: usize) -> Result<LogValue> {
    if k == 0 || k > n {
        return Err(Error::Dimension(format!("deg G_C({k},{n}) needs 1 <= k <= n")));
    }
    let big_n = k * (n - k);
    let num: f64 = log_factorial(big_n) + (0..k).map(log_factorial).sum::<f64>();
    let den: f64 = (n - k..n).map(log_factorial).sum();
    Ok(LogValue::new(num - den))
}
