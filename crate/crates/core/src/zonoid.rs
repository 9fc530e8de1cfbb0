//! The Segre zonoid `C(k,m)` and its singular-value slice `D(k)`: support
//! and radial functions, the tabulated radial profile of `D(2)`, and
//! volumes by quadrature and by Vitale's determinant identity.

use std::f64::consts::{FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geomlin::{lu_log_det, singular_values, Mat, RngStream};
use crate::quadrature::GaussLegendre;
use crate::specfun::{
    elliptic_d, elliptic_e, log_gamma, log_vol_orthogonal, log_vol_stiefel, rho, LogValue,
};
use crate::stats::{mc_mean, tags, Estimate, McConfig};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Relative pivot size below which a Vitale draw counts as degenerate.
pub const DEGENERATE_PIVOT: f64 = 1e-12;

/// Shape parameters of the Segre zonoid `C(k,m) ⊂ R^{k×m}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZonoidDescriptor {
    pub k: usize,
    pub m: usize,
}

impl ZonoidDescriptor {
    pub fn new(k: usize, m: usize) -> Result<Self> {
        if k == 0 || m < k {
            return Err(Error::Dimension(format!("C(k,m) needs 1 <= k <= m, got ({k},{m})")));
        }
        Ok(ZonoidDescriptor { k, m })
    }
}

/// How to evaluate `g_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GkMethod {
    /// Closed form, available for `k ≤ 2`.
    Closed,
    MonteCarlo { cfg: McConfig, samples: u64 },
}

/// Support function `h` of `D(2)`: `(1/π) |σ_1| E(1 − σ_2²/σ_1²)` for
/// `|σ_1| ≥ |σ_2|`, extended symmetrically.
pub fn h2(s1: f64, s2: f64) -> f64 {
    let (a, b) = (s1.abs(), s2.abs());
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == 0.0 {
        return 0.0;
    }
    let ratio = lo / hi;
    let s = (1.0 - ratio * ratio).clamp(0.0, 1.0);
    hi * elliptic_e(s).expect("s in [0,1]") / PI
}

/// Analytic gradient of [`h2`] away from the origin.
pub fn grad_h2(s1: f64, s2: f64) -> [f64; 2] {
    let (a, b) = (s1.abs(), s2.abs());
    if a == 0.0 && b == 0.0 {
        return [0.0, 0.0];
    }
    let swap = b > a;
    let (hi, lo) = if swap { (b, a) } else { (a, b) };
    let t = lo / hi;
    let s = (1.0 - t * t).clamp(0.0, 1.0);
    let e = elliptic_e(s).expect("s in [0,1]");
    // d/ds E = -D/2; D diverges only at s = 1, where t = 0 and t·D -> 0.
    let d = if t == 0.0 { 0.0 } else { elliptic_d(s).expect("s < 1") };
    let g_hi = (e - t * t * d) / PI;
    let g_lo = t * d / PI;
    let (g1, g2) = if swap { (g_lo, g_hi) } else { (g_hi, g_lo) };
    [g1.copysign(s1), g2.copysign(s2)]
}

/// Central-difference gradient of [`h2`] with step `1e-6·‖σ‖`.
pub fn grad_h2_numeric(s1: f64, s2: f64) -> [f64; 2] {
    let step = 1e-6 * s1.hypot(s2);
    [
        (h2(s1 + step, s2) - h2(s1 - step, s2)) / (2.0 * step),
        (h2(s1, s2 + step) - h2(s1, s2 - step)) / (2.0 * step),
    ]
}

/// `g_k(σ) = E (σ_1² z_1² + … + σ_k² z_k²)^{1/2}` with i.i.d. standard normal `z`.
pub fn g_k(sigma: &[f64], method: GkMethod) -> Result<Estimate> {
    let k = sigma.len();
    if k == 0 {
        return Err(Error::Dimension("g_k needs k >= 1".into()));
    }
    match method {
        GkMethod::Closed => {
            let value = match k {
                1 => rho(1) * sigma[0].abs(),
                2 => SQRT_2PI * h2(sigma[0], sigma[1]),
                _ => {
                    return Err(Error::Unsupported(format!(
                        "closed-form g_k only for k <= 2, got k = {k}"
                    )))
                }
            };
            Ok(exact_estimate(value, "closed"))
        }
        GkMethod::MonteCarlo { cfg, samples } => {
            let sig = sigma.to_vec();
            mc_mean(cfg, tags::GK, samples, "mc", move |rng| {
                let mut acc = 0.0;
                for s in &sig {
                    let z = rng.normal();
                    acc += s * s * z * z;
                }
                Some(acc.sqrt())
            })
        }
    }
}

pub(crate) fn exact_estimate(value: f64, method: &str) -> Estimate {
    Estimate {
        value,
        stderr: 0.0,
        n_samples: 0,
        seed: 0,
        method: method.to_string(),
        degenerate_count: 0,
    }
}

/// Support function of `C(k,m)` at `X`: `g_k(sv(X)) / sqrt(2π)`.
pub fn support_c(desc: ZonoidDescriptor, x: &Mat, method: GkMethod) -> Result<Estimate> {
    if x.rows() != desc.k || x.cols() != desc.m {
        return Err(Error::Dimension(format!(
            "X is {}x{}, expected {}x{}",
            x.rows(),
            x.cols(),
            desc.k,
            desc.m
        )));
    }
    let sv = singular_values(x)?;
    Ok(g_k(&sv, method)?.scaled(1.0 / SQRT_2PI))
}

/// Largest value `R_k = ρ_k / sqrt(2πk)` of the radial function of `D(k)`.
pub fn radius_r(k: usize) -> f64 {
    rho(k) / (2.0 * PI * k as f64).sqrt()
}

/// How the `γ(t) = ∇h(cos t, sin t)` curve is differentiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Differentiation {
    Analytic,
    Numeric,
}

/// Lower end of the `t` grid; the profile is closed at `θ = 0` by the
/// exact limit `r_2(0) = 1/π`.
pub const PROFILE_T_MIN: f64 = 1e-3;
pub const PROFILE_VERSION: u32 = 1;
pub const DEFAULT_PROFILE_GRID: usize = 4096;

/// Radial function `r_2(θ)` of `D(2)` on `[0, π/4]`, tabulated along the
/// boundary curve `γ` and interpolated by a monotone (Fritsch–Carlson) cubic.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile2 {
    knots: Vec<(f64, f64)>,
    slopes: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ProfileDoc {
    version: u32,
    k: u32,
    knots: Vec<[f64; 2]>,
}

/// Builds the radial profile of `D(2)` from `grid_size` points of `γ`.
pub fn build_radial_profile_2(grid_size: usize, diff: Differentiation) -> Result<RadialProfile2> {
    if grid_size < 64 {
        return Err(domain("build_radial_profile_2", format!("grid_size = {grid_size} < 64")));
    }
    let mut knots = Vec::with_capacity(grid_size + 1);
    knots.push((0.0, 1.0 / PI));
    for j in 0..grid_size {
        let t = PROFILE_T_MIN + (FRAC_PI_4 - PROFILE_T_MIN) * j as f64 / (grid_size - 1) as f64;
        let (c, s) = (t.cos(), t.sin());
        let g = match diff {
            Differentiation::Analytic => grad_h2(c, s),
            Differentiation::Numeric => grad_h2_numeric(c, s),
        };
        let theta = if j == grid_size - 1 {
            FRAC_PI_4
        } else {
            g[1].atan2(g[0])
        };
        knots.push((theta, g[0].hypot(g[1])));
    }
    for (i, w) in knots.windows(2).enumerate() {
        if !(w[1].0 > w[0].0) {
            return Err(Error::Numerical(format!(
                "boundary angle θ(t) not increasing at knot {i}: {} then {} \
                 ({diff:?} differentiation failed)",
                w[0].0, w[1].0
            )));
        }
    }
    if (knots.last().expect("non-empty").1 - radius_r(2)).abs() > 1e-8 {
        return Err(Error::Numerical("profile misses R_2 at π/4".into()));
    }
    RadialProfile2::from_knots(knots)
}

impl RadialProfile2 {
    /// Validates knots and prepares the interpolator.
    pub fn from_knots(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Profile("need at least two knots".into()));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Profile("θ must be strictly increasing".into()));
            }
        }
        let (t0, tn) = (knots[0].0, knots[knots.len() - 1].0);
        if t0 < 0.0 || tn > FRAC_PI_4 + 1e-15 {
            return Err(Error::Profile(format!("θ range [{t0}, {tn}] outside [0, π/4]")));
        }
        if knots.iter().any(|k| !(k.1 > 0.0) || !k.1.is_finite()) {
            return Err(Error::Profile("radii must be positive and finite".into()));
        }
        let slopes = pchip_slopes(&knots);
        Ok(RadialProfile2 { knots, slopes })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// `r_2` at angle `θ ∈ [0, π/2]` of the direction `(cos θ, sin θ)`,
    /// using `r(θ) = r(π/2 − θ)` above `π/4`.
    pub fn eval(&self, theta: f64) -> f64 {
        let t = if theta > FRAC_PI_4 {
            std::f64::consts::FRAC_PI_2 - theta
        } else {
            theta
        };
        let kn = &self.knots;
        let t = t.clamp(kn[0].0, kn[kn.len() - 1].0);
        let i = match kn.binary_search_by(|k| k.0.total_cmp(&t)) {
            Ok(i) => return kn[i].1,
            Err(i) => i.clamp(1, kn.len() - 1) - 1,
        };
        let (x0, y0) = kn[i];
        let (x1, y1) = kn[i + 1];
        let h = x1 - x0;
        let u = (t - x0) / h;
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        h00 * y0 + h10 * h * self.slopes[i] + h01 * y1 + h11 * h * self.slopes[i + 1]
    }

    /// Versioned JSON document `{version, k: 2, knots: [[θ, r], ...]}`,
    /// each number written with 17 significant digits.
    pub fn to_json(&self) -> String {
        let body: Vec<String> = self
            .knots
            .iter()
            .map(|(t, r)| format!("[{t:.16e},{r:.16e}]"))
            .collect();
        format!(
            "{{\"version\":{PROFILE_VERSION},\"k\":2,\"knots\":[{}]}}",
            body.join(",")
        )
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ProfileDoc = serde_json::from_str(s)?;
        if doc.version != PROFILE_VERSION {
            return Err(Error::Profile(format!("unsupported version {}", doc.version)));
        }
        if doc.k != 2 {
            return Err(Error::Profile(format!("expected k = 2, got {}", doc.k)));
        }
        RadialProfile2::from_knots(doc.knots.into_iter().map(|[t, r]| (t, r)).collect())
    }
}

// Fritsch–Carlson derivative estimates; the right end (θ = π/4) is a
// critical point of the symmetric extension, so its slope is zero.
fn pchip_slopes(knots: &[(f64, f64)]) -> Vec<f64> {
    let n = knots.len();
    let h: Vec<f64> = knots.windows(2).map(|w| w[1].0 - w[0].0).collect();
    let delta: Vec<f64> = knots
        .windows(2)
        .zip(&h)
        .map(|(w, h)| (w[1].1 - w[0].1) / h)
        .collect();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    if n == 2 {
        d[0] = delta[0];
    } else {
        let d0 = ((2.0 * h[0] + h[1]) * delta[0] - h[0] * delta[1]) / (h[0] + h[1]);
        d[0] = if d0 * delta[0] <= 0.0 {
            0.0
        } else if delta[0] * delta[1] <= 0.0 && d0.abs() > 3.0 * delta[0].abs() {
            3.0 * delta[0]
        } else {
            d0
        };
    }
    d[n - 1] = 0.0;
    d
}

/// How the radial function of `D(k)` is evaluated.
#[derive(Debug, Clone, Copy)]
pub enum RadialMethod<'a> {
    /// Tabulated profile (`k = 2`).
    Profile(&'a RadialProfile2),
    /// Convex duality `r(u) = min_{⟨u,τ⟩ = 1} h(τ)`. For `k = 2` the exact
    /// support function is used; for `k ≥ 3` it is the sample mean over a
    /// fixed bank of Gaussian vectors drawn from `seed`.
    Duality { bank_size: usize, seed: u64 },
}

const NEWTON_STEPS: usize = 50;

/// Radial function of `D(k)` at a unit vector `sigma`.
pub fn radial_d(sigma: &[f64], method: RadialMethod<'_>) -> Result<Estimate> {
    let k = sigma.len();
    if k == 0 {
        return Err(Error::Dimension("empty direction".into()));
    }
    let nrm = sigma.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (nrm - 1.0).abs() > 1e-9 {
        return Err(domain("radial_d", format!("‖σ‖ = {nrm} is not 1")));
    }
    if k == 1 {
        return Ok(exact_estimate(radius_r(1), "exact"));
    }
    match method {
        RadialMethod::Profile(p) => {
            if k != 2 {
                return Err(Error::Unsupported("a profile describes D(2) only".into()));
            }
            let theta = sigma[1].abs().atan2(sigma[0].abs());
            Ok(exact_estimate(p.eval(theta), "profile"))
        }
        RadialMethod::Duality { bank_size, seed } => {
            if k == 2 {
                let u = [sigma[0].abs(), sigma[1].abs()];
                Ok(exact_estimate(radial_d2_duality(u)?, "duality"))
            } else {
                radial_dk_bank(sigma, bank_size, seed)
            }
        }
    }
}

// Minimizes the convex function s ↦ h(u + s u⊥) by golden-section search.
fn radial_d2_duality(u: [f64; 2]) -> Result<f64> {
    let perp = [-u[1], u[0]];
    let f = |s: f64| h2(u[0] + s * perp[0], u[1] + s * perp[1]);
    let (mut a, mut b) = (-4.0, 4.0);
    let gr = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-12 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    if (b - a).abs() >= 1e-9 {
        return Err(Error::Numerical("duality minimization did not converge".into()));
    }
    Ok(f(0.5 * (a + b)))
}

// Sample-mean support function over a fixed Gaussian bank, with gradient
// and Hessian; the bank makes the objective a smooth convex function.
struct Bank {
    z2: Vec<f64>,
    k: usize,
}

impl Bank {
    fn new(k: usize, size: usize, seed: u64) -> Self {
        let mut rng = RngStream::new(seed, tags::RADIAL_BANK << 40);
        let z2 = (0..k * size)
            .map(|_| {
                let z = rng.normal();
                z * z
            })
            .collect();
        Bank { z2, k }
    }

    fn size(&self) -> usize {
        self.z2.len() / self.k
    }

    fn h(&self, tau: &[f64]) -> f64 {
        self.z2
            .chunks_exact(self.k)
            .map(|z| z.iter().zip(tau).map(|(a, t)| a * t * t).sum::<f64>().sqrt())
            .sum::<f64>()
            / (self.size() as f64 * SQRT_2PI)
    }

    fn h_with_derivatives(&self, tau: &[f64]) -> (f64, Vec<f64>, Vec<f64>, f64) {
        let k = self.k;
        let mut val = 0.0;
        let mut sq = 0.0;
        let mut grad = vec![0.0; k];
        let mut hess = vec![0.0; k * k];
        for z in self.z2.chunks_exact(k) {
            let q: f64 = z.iter().zip(tau).map(|(a, t)| a * t * t).sum();
            let r = q.sqrt();
            if r == 0.0 {
                continue;
            }
            val += r;
            sq += q;
            for i in 0..k {
                let gi = z[i] * tau[i] / r;
                grad[i] += gi;
                hess[i * k + i] += z[i] / r;
                for l in 0..k {
                    hess[i * k + l] -= gi * z[l] * tau[l] / q;
                }
            }
        }
        let norm = self.size() as f64 * SQRT_2PI;
        let mean = val / self.size() as f64;
        let var = (sq / self.size() as f64 - mean * mean).max(0.0);
        let stderr = (var / self.size() as f64).sqrt() / SQRT_2PI;
        grad.iter_mut().for_each(|g| *g /= norm);
        hess.iter_mut().for_each(|h| *h /= norm);
        (val / norm, grad, hess, stderr)
    }
}

fn radial_dk_bank(sigma: &[f64], bank_size: usize, seed: u64) -> Result<Estimate> {
    let k = sigma.len();
    if bank_size < 2 {
        return Err(domain("radial_d", "bank_size must be at least 2"));
    }
    let bank = Bank::new(k, bank_size, seed);
    let u = sigma.to_vec();
    // Orthonormal basis of u⊥ by Gram–Schmidt against u.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k - 1);
    for e in 0..k {
        if basis.len() == k - 1 {
            break;
        }
        let mut v = vec![0.0; k];
        v[e] = 1.0;
        for _ in 0..2 {
            for b in std::iter::once(&u).chain(basis.iter()) {
                let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    let point = |w: &[f64]| -> Vec<f64> {
        let mut tau = u.clone();
        for (c, b) in w.iter().zip(&basis) {
            tau.iter_mut().zip(b).for_each(|(t, x)| *t += c * x);
        }
        tau
    };
    // Coarse start: 2^k·100 random directions with ⟨u,τ⟩ > 0, rescaled onto
    // the plane ⟨u,τ⟩ = 1.
    let mut rng = RngStream::new(seed, (tags::RADIAL_BANK << 40) | 1);
    let mut best_w = vec![0.0; k - 1];
    let mut best = bank.h(&u);
    for _ in 0..(100usize << k.min(16)) {
        let dir = rng.unit_vector(k);
        let ip: f64 = dir.iter().zip(&u).map(|(a, b)| a * b).sum();
        if ip < 0.05 {
            continue;
        }
        let w: Vec<f64> = basis
            .iter()
            .map(|b| b.iter().zip(&dir).map(|(x, y)| x * y).sum::<f64>() / ip)
            .collect();
        let v = bank.h(&point(&w));
        if v < best {
            best = v;
            best_w = w;
        }
    }
    // Damped Newton on the (k−1)-dimensional plane.
    let mut w = best_w;
    let mut converged = false;
    for _ in 0..NEWTON_STEPS {
        let tau = point(&w);
        let (f0, g, h, _) = bank.h_with_derivatives(&tau);
        let gw: Vec<f64> = basis
            .iter()
            .map(|b| b.iter().zip(&g).map(|(x, y)| x * y).sum())
            .collect();
        let gnorm = gw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gnorm < 1e-13 {
            converged = true;
            break;
        }
        let d = k - 1;
        let mut hw = vec![0.0; d * d];
        for a in 0..d {
            for b in 0..d {
                let mut acc = 0.0;
                for i in 0..k {
                    for l in 0..k {
                        acc += basis[a][i] * h[i * k + l] * basis[b][l];
                    }
                }
                hw[a * d + b] = acc;
            }
        }
        let step = solve_spd(&hw, &gw, d).unwrap_or_else(|| gw.clone());
        let mut lambda = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let trial: Vec<f64> = w.iter().zip(&step).map(|(x, s)| x - lambda * s).collect();
            if bank.h(&point(&trial)) <= f0 {
                w = trial;
                moved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !moved {
            converged = gnorm < 1e-8;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical(
            "radial minimization did not converge in 50 Newton steps".into(),
        ));
    }
    let (value, _, _, stderr) = bank.h_with_derivatives(&point(&w));
    Ok(Estimate {
        value,
        stderr,
        n_samples: bank.size() as u64,
        seed,
        method: "duality-mc".into(),
        degenerate_count: 0,
    })
}

// Cholesky solve of a small symmetric positive definite system.
fn solve_spd(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for p in 0..j {
                s -= l[i * n + p] * l[j * n + p];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for p in 0..i {
            y[i] -= l[i * n + p] * y[p];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for p in i + 1..n {
            y[i] -= l[p * n + i] * y[p];
        }
        y[i] /= l[i * n + i];
    }
    Some(y)
}

/// Gauss–Legendre points per panel used by the volume quadrature.
pub const POINTS_PER_PANEL: usize = 32;
pub const DEFAULT_QUAD_POINTS: usize = 32 * 16;

/// Quadrature result on the log scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogQuad {
    pub log_value: LogValue,
    /// Relative error estimate `|I_2p − I_p| / I_2p` from doubling the panels.
    pub rel_error: f64,
}

impl LogQuad {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    pub fn abs_error(&self) -> f64 {
        self.rel_error * self.value()
    }
}

/// `∫_0^{π/4} (r_2(θ)² cos θ sin θ)^m (cos²θ − sin²θ)/(cos θ sin θ)² dθ`
/// on the log scale.
pub fn log_lines_integral(m: usize, profile: &RadialProfile2, quad_points: usize) -> Result<LogQuad> {
    if m < 2 {
        return Err(domain("volume quadrature", format!("m = {m} < 2")));
    }
    let panels = (quad_points / POINTS_PER_PANEL).max(1);
    let rule = GaussLegendre::new(POINTS_PER_PANEL);
    let mf = m as f64;
    let log_integral = |panels: usize| -> f64 {
        let logs: Vec<(f64, f64)> = rule
            .composite_points(0.0, FRAC_PI_4, panels)
            .into_iter()
            .map(|(t, w)| {
                let (s, c) = t.sin_cos();
                let r = profile.eval(t);
                let cs = c * s;
                let l = mf * (r * r * cs).ln() + ((c * c - s * s) / (cs * cs)).ln();
                (l, w)
            })
            .collect();
        logsumexp_weighted(&logs)
    };
    let base = log_integral(panels);
    let fine = log_integral(2 * panels);
    if !fine.is_finite() {
        return Err(Error::Numerical("volume quadrature produced a non-finite value".into()));
    }
    Ok(LogQuad {
        log_value: LogValue::new(fine),
        rel_error: (1.0 - (base - fine).exp()).abs(),
    })
}

pub(crate) fn logsumexp_weighted(terms: &[(f64, f64)]) -> f64 {
    let max = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|(l, w)| w * (l - max).exp()).sum::<f64>().ln()
}

/// `|C(2,m)|` on the log scale by composite Gauss–Legendre quadrature.
pub fn log_vol_c_quadrature(m: usize, profile: &RadialProfile2, quad_points: usize) -> Result<LogQuad> {
    let integral = log_lines_integral(m, profile, quad_points)?;
    let pref = log_vol_orthogonal(2) * log_vol_stiefel(2, m)? / LogValue::from_value(8.0 * m as f64);
    Ok(LogQuad {
        log_value: pref * integral.log_value,
        rel_error: integral.rel_error,
    })
}

/// `|C(2,m)|` with an absolute error estimate.
pub fn vol_c_quadrature(m: usize, profile: &RadialProfile2, quad_points: usize) -> Result<(f64, f64)> {
    let q = log_vol_c_quadrature(m, profile, quad_points)?;
    let v = q.value();
    if !v.is_finite() || v == 0.0 {
        return Err(Error::Overflow(format!("|C(2,{m})| is not representable")));
    }
    Ok((v, q.abs_error()))
}

/// Largest `km` accepted by the Vitale estimator.
pub const MAX_VITALE_DIM: usize = 36;

/// `|C(k,m)| = E|det M| / (km)!` where `M` has the `km` i.i.d. columns
/// `vec(x yᵀ)` with Gaussian `x ∈ R^k`, `y ∈ R^m`.
pub fn vol_c_vitale_mc(k: usize, m: usize, cfg: McConfig, samples: u64) -> Result<Estimate> {
    let d = k * m;
    if k == 0 || m == 0 {
        return Err(Error::Dimension("k and m must be positive".into()));
    }
    if d > MAX_VITALE_DIM {
        return Err(Error::Unsupported(format!("km = {d} exceeds {MAX_VITALE_DIM}")));
    }
    let log_fact = log_gamma(d as f64 + 1.0)?;
    mc_mean(cfg, tags::VITALE_C, samples, "vitale", move |rng| {
        let mut a = vec![0.0; d * d];
        let mut x = vec![0.0; k];
        let mut y = vec![0.0; m];
        for col in 0..d {
            rng.fill_normal(&mut x);
            rng.fill_normal(&mut y);
            for i in 0..k {
                for j in 0..m {
                    a[(i * m + j) * d + col] = x[i] * y[j];
                }
            }
        }
        let lu = lu_log_det(&mut a, d);
        if lu.is_degenerate(DEGENERATE_PIVOT) {
            None
        } else {
            Some((lu.log_abs - log_fact).exp())
        }
    })
}

/// Zonoid volume of the law of `x·y` with `x` a scalar Gaussian and `y` a
/// Gaussian vector in `R^m`, by Vitale with `m` columns: an alternate
/// construction of `|C(1,m)|`.
pub fn vol_scaled_gaussian_zonoid_mc(m: usize, cfg: McConfig, samples: u64) -> Result<Estimate> {
    if m == 0 || m > MAX_VITALE_DIM {
        return Err(Error::Dimension(format!("m = {m} outside 1..={MAX_VITALE_DIM}")));
    }
    let log_fact = log_gamma(m as f64 + 1.0)?;
    mc_mean(cfg, tags::VITALE_LINE, samples, "vitale-scaled", move |rng| {
        // det[x_1 y_1 | ... | x_m y_m] = (Π x_j) det[y_1 | ... | y_m]
        let mut a = vec![0.0; m * m];
        rng.fill_normal(&mut a);
        let mut log_scale = 0.0;
        for _ in 0..m {
            log_scale += rng.normal().abs().ln();
        }
        let lu = lu_log_det(&mut a, m);
        if lu.is_degenerate(DEGENERATE_PIVOT) || !log_scale.is_finite() {
            None
        } else {
            Some((lu.log_abs + log_scale - log_fact).exp())
        }
    })
}

/// `|B(k,m)|` for the ball of radius `R_k` in `R^{k×m}`, log scale.
pub fn log_vol_ball(k: usize, m: usize) -> LogValue {
    let d = (k * m) as f64;
    LogValue::new(
        d * radius_r(k).ln() + d / 2.0 * PI.ln() - crate::specfun::log_gamma_unchecked(1.0 + d / 2.0),
    )
}

pub fn vol_ball(k: usize, m: usize) -> f64 {
    log_vol_ball(k, m).exp()
}

/// `p_k(σ) = Π |σ_i|`.
pub fn p_k(sigma: &[f64]) -> f64 {
    sigma.iter().map(|x| x.abs()).product()
}

/// `q_k(σ) = p_k(σ)^{-k} Π_{i<j} |σ_i² − σ_j²|`; a pole at any zero coordinate.
pub fn q_k(sigma: &[f64]) -> Result<f64> {
    let p = p_k(sigma);
    if p == 0.0 {
        return Err(domain("q_k", "pole at a zero coordinate"));
    }
    let k = sigma.len();
    let mut v = 1.0;
    for i in 0..k {
        for j in i + 1..k {
            v *= (sigma[i] * sigma[i] - sigma[j] * sigma[j]).abs();
        }
    }
    Ok(v / p.powi(k as i32))
}
