//! Monte Carlo estimators and statistical checks: average scaling factors,
//! the `G(2,4)` integral, Schubert-variety volume ratios, the density of
//! principal angles, Vitale's identity and the singular-value integration
//! formula.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::error::{domain, Error, Result};
use crate::geomlin::{
    lu_log_det, principal_angles, sample_gaussian_matrix, sample_uniform_subspace, singular_values,
    Frame, RngStream,
};
use crate::quadrature::GaussLegendre;
use crate::specfun::{log_gamma, log_vol_orthogonal, log_vol_sphere, log_vol_stiefel, multivariate_gamma_log};
use crate::stats::{mc_mean, par_chunks, tags};
use crate::zonoid::{RadialProfile2, DEGENERATE_PIVOT};

pub use crate::stats::{Estimate, McConfig, StreamingStats, DEFAULT_SEED};

/// Largest `km` accepted by the scaling-factor estimators.
pub const MAX_ALPHA_DIM: usize = 36;

/// Average scaling factor `α(k,m) = E ‖(u_1⊗v_1) ∧ … ∧ (u_N⊗v_N)‖`, `N = km`,
/// with independent uniform unit vectors `u_i ∈ S^{k−1}`, `v_i ∈ S^{m−1}`.
pub fn alpha_mc(k: usize, m: usize, cfg: McConfig, samples: u64) -> Result<Estimate> {
    let n = k * m;
    if k == 0 || m == 0 || n > MAX_ALPHA_DIM {
        return Err(Error::Dimension(format!("need 1 <= km <= {MAX_ALPHA_DIM}, got ({k},{m})")));
    }
    mc_mean(cfg, tags::ALPHA, samples, "mc", move |rng| {
        let us: Vec<Vec<f64>> = (0..n).map(|_| rng.unit_vector(k)).collect();
        let vs: Vec<Vec<f64>> = (0..n).map(|_| rng.unit_vector(m)).collect();
        // Gram matrix under the trace inner product: ⟨u_i⊗v_i, u_j⊗v_j⟩ = (u_i·u_j)(v_i·v_j).
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let uu: f64 = us[i].iter().zip(&us[j]).map(|(a, b)| a * b).sum();
                let vv: f64 = vs[i].iter().zip(&vs[j]).map(|(a, b)| a * b).sum();
                gram[i * n + j] = uu * vv;
                gram[j * n + i] = uu * vv;
            }
        }
        let lu = lu_log_det(&mut gram, n);
        if lu.is_degenerate(DEGENERATE_PIVOT) || lu.sign < 0.0 {
            None
        } else {
            Some((0.5 * lu.log_abs).exp())
        }
    })
}

/// Exact complex scaling factor `α_C(k,m) = N!/N^N` with `N = km ≤ 20`.
pub fn alpha_complex_exact(k: usize, m: usize) -> Result<BigRational> {
    let n = k * m;
    if n == 0 || n > 20 {
        return Err(Error::Unsupported(format!("exact α_C needs 1 <= km <= 20, got {n}")));
    }
    let fact = (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i));
    let pow = num_traits::pow(BigInt::from(n), n);
    Ok(BigRational::new(fact, pow))
}

fn complex_unit_vector(rng: &mut RngStream, d: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..d).map(|_| Complex64::new(rng.normal(), rng.normal())).collect();
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 0.0 {
            return v.into_iter().map(|z| z / nrm).collect();
        }
    }
}

// |det|² of a complex N×N matrix (row-major) by LU with partial pivoting;
// `None` when a pivot falls below the degeneracy threshold.
fn complex_abs_det_sq(a: &mut [Complex64], n: usize) -> Option<f64> {
    let scale = a.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    if scale == 0.0 {
        return None;
    }
    let mut log_abs = 0.0;
    for col in 0..n {
        let (mut p, mut best) = (col, a[col * n + col].norm());
        for r in col + 1..n {
            let v = a[r * n + col].norm();
            if v > best {
                best = v;
                p = r;
            }
        }
        if best < DEGENERATE_PIVOT * scale {
            return None;
        }
        if p != col {
            for j in 0..n {
                a.swap(col * n + j, p * n + j);
            }
        }
        let piv = a[col * n + col];
        log_abs += best.ln();
        for r in col + 1..n {
            let f = a[r * n + col] / piv;
            for j in col + 1..n {
                let t = a[col * n + j];
                a[r * n + j] -= f * t;
            }
        }
    }
    Some((2.0 * log_abs).exp())
}

/// Monte Carlo estimate of `α_C(k,m) = E ‖∧(u_i⊗v_i)‖²` with complex unit vectors.
pub fn alpha_complex_mc(k: usize, m: usize, cfg: McConfig, samples: u64) -> Result<Estimate> {
    let n = k * m;
    if k == 0 || m == 0 || n > MAX_ALPHA_DIM {
        return Err(Error::Dimension(format!("need 1 <= km <= {MAX_ALPHA_DIM}, got ({k},{m})")));
    }
    mc_mean(cfg, tags::ALPHA_C, samples, "mc", move |rng| {
        let mut a = vec![Complex64::new(0.0, 0.0); n * n];
        for col in 0..n {
            let u = complex_unit_vector(rng, k);
            let v = complex_unit_vector(rng, m);
            for i in 0..k {
                for j in 0..m {
                    a[(i * m + j) * n + col] = u[i] * v[j];
                }
            }
        }
        complex_abs_det_sq(&mut a, n)
    })
}

/// `(2π)^6 / 2^13`: converts the mean of `|a|` over uniform angles into the
/// expected degree of `G(2,4)`.
pub fn edeg24_scale() -> f64 {
    (2.0 * PI).powi(6) / 8192.0
}

/// `a(t, s)` as the symmetric 3×3 determinant with rows
/// `(sin t_i sin s_i)`, `(cos t_i sin s_i)`, `(sin t_i cos s_i)`.
pub fn edeg24_integrand(t: [f64; 3], s: [f64; 3]) -> f64 {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        let (st, ct) = t[i].sin_cos();
        let (ss, cs) = s[i].sin_cos();
        m[0][i] = st * ss;
        m[1][i] = ct * ss;
        m[2][i] = st * cs;
    }
    det3(&m)
}

#[inline]
fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// `|det|` of the 4×4 matrix with columns `vec(u_i v_iᵀ)` for
/// `u_i = (cos t_i, sin t_i)`, `v_i = (cos s_i, sin s_i)`, `i = 1..4`.
/// Equals `|a(t, s)|` when `t_4 = s_4 = 0`.
pub fn edeg24_integrand_full(t: [f64; 4], s: [f64; 4]) -> f64 {
    let mut a = [0.0; 16];
    for i in 0..4 {
        let (st, ct) = t[i].sin_cos();
        let (ss, cs) = s[i].sin_cos();
        a[i] = ct * cs;
        a[4 + i] = ct * ss;
        a[8 + i] = st * cs;
        a[12 + i] = st * ss;
    }
    let lu = lu_log_det(&mut a, 4);
    if lu.sign == 0.0 {
        0.0
    } else {
        lu.log_abs.exp()
    }
}

/// Evaluation mode of the `G(2,4)` integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Edeg24Mode {
    /// Tensor midpoint rule with this many points per dimension (≤ 24).
    Quadrature { points_per_dim: usize },
    MonteCarlo { cfg: McConfig, samples: u64 },
}

/// `edeg G(2,4) = 2^{-13} ∫_{[0,2π]^6} |a(t,s)| dt ds`.
///
/// In quadrature mode `stderr` holds `|I(p) − I(p/2)|`.
pub fn edeg24_integral(mode: Edeg24Mode) -> Result<Estimate> {
    match mode {
        Edeg24Mode::MonteCarlo { cfg, samples } => {
            let e = mc_mean(cfg, tags::EDEG24, samples, "mc", |rng| {
                let mut t = [0.0; 3];
                let mut s = [0.0; 3];
                for i in 0..3 {
                    t[i] = 2.0 * PI * rng.uniform();
                    s[i] = 2.0 * PI * rng.uniform();
                }
                Some(edeg24_integrand(t, s).abs())
            })?;
            Ok(e.scaled(edeg24_scale()))
        }
        Edeg24Mode::Quadrature { points_per_dim } => {
            if !(2..=24).contains(&points_per_dim) {
                return Err(domain("edeg24_integral", format!(
                    "points_per_dim = {points_per_dim} outside 2..=24"
                )));
            }
            let fine = edeg24_midpoint(points_per_dim);
            let coarse = edeg24_midpoint(points_per_dim.div_ceil(2));
            Ok(Estimate {
                value: fine,
                stderr: (fine - coarse).abs(),
                n_samples: (points_per_dim as u64).pow(6),
                seed: 0,
                method: "quadrature".into(),
                degenerate_count: 0,
            })
        }
    }
}

fn edeg24_midpoint(p: usize) -> f64 {
    let h = 2.0 * PI / p as f64;
    let trig: Vec<(f64, f64)> = (0..p).map(|i| ((i as f64 + 0.5) * h).sin_cos()).collect();
    let mut acc = 0.0;
    for &(st1, ct1) in &trig {
        for &(st2, ct2) in &trig {
            for &(st3, ct3) in &trig {
                for &(ss1, cs1) in &trig {
                    for &(ss2, cs2) in &trig {
                        for &(ss3, cs3) in &trig {
                            let m = [
                                [st1 * ss1, st2 * ss2, st3 * ss3],
                                [ct1 * ss1, ct2 * ss2, ct3 * ss3],
                                [st1 * cs1, st2 * cs2, st3 * cs3],
                            ];
                            acc += det3(&m).abs();
                        }
                    }
                }
            }
        }
    }
    acc / (p as f64).powi(6) * edeg24_scale()
}

/// `|Σ(k,n)| / |G(k,n)| = Γ((k+1)/2)/Γ(k/2) · Γ((n−k+1)/2)/Γ((n−k)/2)`.
///
/// Each factor is a rational times `π^{±1/2}`, so the product is evaluated
/// as an exact rational times `π^{-1}`, `1` or `π`.
pub fn schubert_ratio_exact(k: usize, n: usize) -> Result<f64> {
    if k == 0 || k >= n {
        return Err(Error::Dimension(format!("need 1 <= k < n, got ({k},{n})")));
    }
    let (qa, ea) = gamma_half_ratio(k);
    let (qb, eb) = gamma_half_ratio(n - k);
    let q = (qa * qb)
        .to_f64()
        .ok_or_else(|| Error::Numerical("Schubert ratio not representable".into()))?;
    Ok(match ea + eb {
        -2 => q / PI,
        0 => q,
        _ => q * PI,
    })
}

// Γ((j+1)/2)/Γ(j/2) = q · π^{e/2}: Γ(1)/Γ(1/2) = π^{-1/2}, Γ(3/2)/Γ(1) = π^{1/2}/2,
// and the ratio picks up a factor (j+1)/j when j grows by two.
fn gamma_half_ratio(j: usize) -> (BigRational, i32) {
    let (mut q, e, start) = if j % 2 == 1 {
        (BigRational::one(), -1, 1)
    } else {
        (BigRational::new(1.into(), 2.into()), 1, 2)
    };
    let mut i = start;
    while i < j {
        q *= BigRational::new(BigInt::from(i + 1), BigInt::from(i));
        i += 2;
    }
    (q, e)
}

/// Tube estimate `P[θ_1 ≤ ε, θ_2 ≥ δ] / (2ε)` of the Schubert ratio, with
/// `A` uniform in `G(k,n)` and `B` a fixed `(n−k)`-plane. Reduces to
/// `k ≤ n−k` by duality.
pub fn schubert_ratio_mc(
    k: usize,
    n: usize,
    eps: f64,
    delta: f64,
    cfg: McConfig,
    samples: u64,
) -> Result<Estimate> {
    if k == 0 || k >= n {
        return Err(Error::Dimension(format!("need 1 <= k < n, got ({k},{n})")));
    }
    if !(eps > 0.0 && eps <= delta && delta < FRAC_PI_2) {
        return Err(domain("schubert_ratio_mc", format!(
            "need 0 < eps <= delta < π/2, got eps = {eps}, delta = {delta}"
        )));
    }
    let k = k.min(n - k);
    let (sin_eps, sin_delta) = (eps.sin(), delta.sin());
    let e = mc_mean(cfg, tags::SCHUBERT, samples, "tube-mc", move |rng| {
        let a = sample_uniform_subspace(rng, n, k).ok()?;
        // B = span(e_1..e_{n−k}); the sines of the principal angles are the
        // singular values of the last k rows of A.
        let m = a.matrix();
        let mut bottom = crate::geomlin::Mat::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                bottom[(i, j)] = m[(n - k + i, j)];
            }
        }
        let mut sines = singular_values(&bottom).ok()?;
        sines.reverse();
        let hit = sines[0] <= sin_eps && (k == 1 || sines[1] >= sin_delta);
        Some(if hit { 1.0 } else { 0.0 })
    })?;
    Ok(e.scaled(1.0 / (2.0 * eps)))
}

fn check_density_dims(k: usize, l: usize, n: usize) -> Result<()> {
    if k == 0 || k > l || k + l > n {
        return Err(Error::Dimension(format!(
            "need 1 <= k <= l and k + l <= n, got ({k},{l},{n})"
        )));
    }
    Ok(())
}

/// `ln c_{k,l,n}` of the principal-angle density.
pub fn density_log_constant(k: usize, l: usize, n: usize) -> Result<f64> {
    check_density_dims(k, l, n)?;
    let kf = k as f64;
    Ok(kf * std::f64::consts::LN_2 + kf * kf / 2.0 * PI.ln() + multivariate_gamma_log(k, n as f64 / 2.0)?
        - multivariate_gamma_log(k, kf / 2.0)?
        - multivariate_gamma_log(k, l as f64 / 2.0)?
        - multivariate_gamma_log(k, (n - l) as f64 / 2.0)?)
}

fn density_unchecked(log_c: f64, k: usize, l: usize, n: usize, theta: &[f64]) -> f64 {
    let mut v = log_c.exp();
    for t in theta {
        let (s, c) = t.sin_cos();
        v *= c.powi((l - k) as i32) * s.powi((n - l - k) as i32);
    }
    for i in 0..k {
        for j in i + 1..k {
            v *= theta[i].cos().powi(2) - theta[j].cos().powi(2);
        }
    }
    v
}

/// Joint density of the principal angles between a uniform `k`-plane and a
/// fixed `l`-plane in `R^n`, at ascending `θ ∈ [0, π/2]^k`.
pub fn density_pdf(k: usize, l: usize, n: usize, theta: &[f64]) -> Result<f64> {
    let log_c = density_log_constant(k, l, n)?;
    if theta.len() != k {
        return Err(Error::Dimension(format!("expected {k} angles, got {}", theta.len())));
    }
    if theta.iter().any(|t| !(0.0..=FRAC_PI_2).contains(t)) {
        return Err(domain("density_pdf", "angles must lie in [0, π/2]"));
    }
    if theta.windows(2).any(|w| w[1] < w[0]) {
        return Err(domain("density_pdf", "angles must be ascending"));
    }
    Ok(density_unchecked(log_c, k, l, n, theta))
}

/// Integral of the density over the ordered simplex
/// `0 ≤ θ_1 ≤ … ≤ θ_k ≤ π/2` by nested Gauss–Legendre (`k ≤ 3`).
pub fn density_normalization(k: usize, l: usize, n: usize, quad_points: usize) -> Result<f64> {
    let log_c = density_log_constant(k, l, n)?;
    if k > 3 {
        return Err(Error::Unsupported(format!("normalization supports k <= 3, got {k}")));
    }
    if quad_points == 0 {
        return Err(domain("density_normalization", "quad_points must be positive"));
    }
    let rule = GaussLegendre::new(quad_points);
    let mut theta = vec![0.0; k];
    Ok(nested(&rule, 0, 0.0, &mut theta, &|th: &[f64]| {
        density_unchecked(log_c, k, l, n, th)
    }))
}

fn nested(rule: &GaussLegendre, depth: usize, lo: f64, theta: &mut Vec<f64>, f: &dyn Fn(&[f64]) -> f64) -> f64 {
    if depth == theta.len() {
        return f(theta);
    }
    let half = 0.5 * (FRAC_PI_2 - lo);
    let mid = 0.5 * (FRAC_PI_2 + lo);
    let mut acc = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let t = mid + half * x;
        theta[depth] = t;
        acc += w * nested(rule, depth + 1, t, theta, f);
    }
    acc * half
}

/// Bins per angle in [`density_gof`].
pub const GOF_BINS: usize = 30;

/// Binned L1 distance between the empirical distribution of sampled
/// principal angles and the exact density (`k ∈ {1, 2}`).
pub fn density_gof(k: usize, l: usize, n: usize, cfg: McConfig, samples: u64) -> Result<f64> {
    let log_c = density_log_constant(k, l, n)?;
    if k > 2 {
        return Err(Error::Unsupported(format!("goodness of fit supports k <= 2, got {k}")));
    }
    let nb = GOF_BINS;
    let cells = nb.pow(k as u32);
    let b = Frame::coordinate(n, &(0..l).collect::<Vec<_>>())?;
    let width = FRAC_PI_2 / nb as f64;
    let counts = par_chunks(
        cfg,
        tags::DENSITY,
        samples,
        || vec![0u64; cells],
        |rng, acc| {
            let a = sample_uniform_subspace(rng, n, k).expect("valid dimensions");
            let angles = principal_angles(&a, &b).expect("same ambient space").angles;
            let idx = angles
                .iter()
                .fold(0usize, |i, t| i * nb + ((t / width) as usize).min(nb - 1));
            acc[idx] += 1;
        },
        |mut x, y| {
            x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
            x
        },
    )?;
    let total = samples as f64;
    let rule = GaussLegendre::new(8);
    let pdf = |th: &[f64]| density_unchecked(log_c, k, l, n, th);
    let mut l1 = 0.0;
    for (idx, &cnt) in counts.iter().enumerate() {
        let i = idx / nb.pow(k as u32 - 1);
        let j = idx % nb;
        let (a0, a1) = (i as f64 * width, (i + 1) as f64 * width);
        let mass = if k == 1 {
            rule.integrate(|t| pdf(&[t]), a0, a1)
        } else {
            let (b0, b1) = (j as f64 * width, (j + 1) as f64 * width);
            if j < i {
                0.0
            } else if j > i {
                rule.integrate(|t1| rule.integrate(|t2| pdf(&[t1, t2]), b0, b1), a0, a1)
            } else {
                rule.integrate(|t1| rule.integrate(|t2| pdf(&[t1, t2]), t1, a1), a0, a1)
            }
        };
        l1 += (cnt as f64 / total - mass).abs();
    }
    Ok(l1)
}

/// `E|det G| = d! / (2^{d/2} Γ(1 + d/2))` for a `d×d` standard Gaussian `G`.
pub fn vitale_closed_form(d: usize) -> f64 {
    let df = d as f64;
    (log_gamma(df + 1.0).expect("d >= 0") - df / 2.0 * std::f64::consts::LN_2
        - log_gamma(1.0 + df / 2.0).expect("positive"))
    .exp()
}

/// Monte Carlo `E|det G|` for a `d×d` standard Gaussian matrix (`d ≤ 12`).
pub fn vitale_check(d: usize, cfg: McConfig, samples: u64) -> Result<Estimate> {
    if d == 0 || d > 12 {
        return Err(Error::Dimension(format!("d = {d} outside 1..=12")));
    }
    mc_mean(cfg, tags::VITALE_DET, samples, "mc", move |rng| {
        let mut a = vec![0.0; d * d];
        rng.fill_normal(&mut a);
        let lu = lu_log_det(&mut a, d);
        if lu.is_degenerate(DEGENERATE_PIVOT) {
            None
        } else {
            Some(lu.log_abs.exp())
        }
    })
}

/// Invariant test functions of the singular values for
/// [`integration_formula_check`].
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    /// `f ≡ 1`.
    One,
    /// `σ_1^a σ_2^b` with `σ_1 ≥ σ_2`.
    SvPower(f64, f64),
    /// `r_2(σ/‖σ‖)^{2m}`.
    Radial,
}

impl TestFunction {
    /// Parses `one`, `sv-power:a,b` or `radial`.
    pub fn parse(id: &str) -> Result<Self> {
        match id {
            "one" => Ok(TestFunction::One),
            "radial" => Ok(TestFunction::Radial),
            _ => {
                let rest = id
                    .strip_prefix("sv-power:")
                    .ok_or_else(|| Error::Unsupported(format!("unknown test function '{id}'")))?;
                let (a, b) = rest
                    .split_once(',')
                    .ok_or_else(|| Error::Unsupported(format!("malformed test function '{id}'")))?;
                let parse = |x: &str| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Unsupported(format!("malformed exponent in '{id}'")))
                };
                Ok(TestFunction::SvPower(parse(a)?, parse(b)?))
            }
        }
    }

    fn eval(&self, s1: f64, s2: f64, m: usize, profile: Option<&RadialProfile2>) -> f64 {
        match self {
            TestFunction::One => 1.0,
            TestFunction::SvPower(a, b) => s1.powf(*a) * s2.powf(*b),
            TestFunction::Radial => {
                let p = profile.expect("checked by caller");
                p.eval(s2.atan2(s1)).powi(2 * m as i32)
            }
        }
    }
}

/// Both sides of the singular-value integration formula on `S^{2m−1}`:
/// the left by Monte Carlo over Gaussian matrices projected to the
/// Frobenius sphere, the right by quadrature over `θ ∈ [0, π/4]`.
pub fn integration_formula_check(
    k: usize,
    m: usize,
    test_fn: &TestFunction,
    profile: Option<&RadialProfile2>,
    cfg: McConfig,
    samples: u64,
    quad_points: usize,
) -> Result<(Estimate, f64)> {
    if k != 2 || !(2..=8).contains(&m) {
        return Err(Error::Unsupported(format!("need k = 2 and 2 <= m <= 8, got ({k},{m})")));
    }
    if *test_fn == TestFunction::Radial && profile.is_none() {
        return Err(domain("integration_formula_check", "the radial test function needs a profile"));
    }
    let sphere = log_vol_sphere(2 * m - 1).exp();
    let tf = test_fn.clone();
    let lhs = mc_mean(cfg, tags::INTEGRATION, samples, "mc", |rng| {
        let x = sample_gaussian_matrix(rng, 2, m);
        let f = x.frobenius_norm();
        let sv = singular_values(&x).ok()?;
        Some(tf.eval(sv[0] / f, sv[1] / f, m, profile))
    })?
    .scaled(sphere);
    let pref = (log_vol_orthogonal(2) * log_vol_stiefel(2, m)?).exp() / 4.0;
    let rule = GaussLegendre::new(32);
    let panels = (quad_points / 32).max(1);
    let rhs = pref
        * rule.composite(
            |t| {
                let (s, c) = t.sin_cos();
                test_fn.eval(c, s, m, profile) * (c * s).powi(m as i32 - 2) * (c * c - s * s)
            },
            0.0,
            FRAC_PI_4,
            panels,
        );
    Ok((lhs, rhs))
}

/// Exact value of `α_C(k,m)` as a float.
pub fn alpha_complex_exact_f64(k: usize, m: usize) -> Result<f64> {
    alpha_complex_exact(k, m)?
        .to_f64()
        .ok_or_else(|| Error::Numerical("α_C not representable".into()))
}
