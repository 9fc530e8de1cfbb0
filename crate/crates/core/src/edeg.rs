//! Expected degrees of real Grassmannians: the exact quadrature for lines,
//! the zonoid assembly for general `(k,n)`, upper bounds, asymptotics and a
//! Laplace-method evaluator.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::adaptive_gk;
use crate::specfun::{log_gamma, log_rho, log_vol_grassmann_real, log_vol_rp, LogValue};
use crate::stats::McConfig;
use crate::zonoid::{log_lines_integral, log_vol_c_quadrature, vol_c_vitale_mc, RadialProfile2, MAX_VITALE_DIM};

/// Beyond this many dimensions `k(n−k)` only the log-scale value is handed out.
pub const MAX_DIRECT_DIM: usize = 30;

/// How an [`EdegResult`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdegMethod {
    Quadrature,
    ZonoidMc,
    TransversalMc,
    UpperBound,
    Asymptotic,
}

impl EdegMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            EdegMethod::Quadrature => "quadrature",
            EdegMethod::ZonoidMc => "zonoid_mc",
            EdegMethod::TransversalMc => "transversal_mc",
            EdegMethod::UpperBound => "upper_bound",
            EdegMethod::Asymptotic => "asymptotic",
        }
    }
}

/// An expected degree (or bound on one), held on the log scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdegResult {
    pub k: usize,
    pub n: usize,
    pub log_value: LogValue,
    pub method: EdegMethod,
    /// Relative error: panel doubling for quadrature, `stderr/value` for
    /// Monte Carlo, zero for closed forms.
    pub rel_error: f64,
    /// Draws behind a Monte Carlo result (zero otherwise).
    pub n_samples: u64,
    pub degenerate_count: u64,
}

impl EdegResult {
    fn closed(k: usize, n: usize, log_value: LogValue, method: EdegMethod) -> Self {
        EdegResult { k, n, log_value, method, rel_error: 0.0, n_samples: 0, degenerate_count: 0 }
    }

    /// Whether the direct value is handed out (`k(n−k) ≤ 30`).
    pub fn is_direct(&self) -> bool {
        self.k * (self.n - self.k) <= MAX_DIRECT_DIM
    }

    /// The value itself; refused with [`Error::Overflow`] above `k(n−k) = 30`.
    pub fn value(&self) -> Result<f64> {
        if !self.is_direct() {
            return Err(Error::Overflow(format!(
                "edeg G({},{}) has k(n-k) = {} > {MAX_DIRECT_DIM}",
                self.k,
                self.n,
                self.k * (self.n - self.k)
            )));
        }
        Ok(self.log_value.exp())
    }

    /// Absolute error of [`Self::value`].
    pub fn error_estimate(&self) -> Result<f64> {
        Ok(self.rel_error * self.value()?)
    }
}

fn check_kn(k: usize, n: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::Dimension(format!("need 1 <= k < n, got ({k},{n})")));
    }
    Ok(())
}

/// `π^{2n−2} Γ(2n−1) / ((2n−2) Γ(n−2) Γ(n))`, log scale.
fn log_lines_prefactor(n: usize) -> Result<f64> {
    let nf = n as f64;
    Ok((2.0 * nf - 2.0) * PI.ln() + log_gamma(2.0 * nf - 1.0)? - (2.0 * nf - 2.0).ln()
        - log_gamma(nf - 2.0)?
        - log_gamma(nf)?)
}

/// `edeg G(2, n+1)` by quadrature of the singular-value radial function.
pub fn edeg_lines_quadrature(n: usize, profile: &RadialProfile2, quad_points: usize) -> Result<EdegResult> {
    if n < 3 {
        return Err(domain("edeg_lines_quadrature", format!("n = {n} < 3")));
    }
    let q = log_lines_integral(n - 1, profile, quad_points)?;
    Ok(EdegResult {
        rel_error: q.rel_error,
        ..EdegResult::closed(2, n + 1, LogValue::new(log_lines_prefactor(n)?) * q.log_value, EdegMethod::Quadrature)
    })
}

/// Leading asymptotic `8/(3π^{5/2}√n) · (π²/4)^n` of `edeg G(2, n+1)`, log scale.
pub fn log_edeg_lines_asymptotic(n: usize) -> Result<LogValue> {
    if n == 0 {
        return Err(domain("edeg_lines_asymptotic", "n must be positive"));
    }
    let nf = n as f64;
    Ok(LogValue::new(
        (8.0 / 3.0f64).ln() - 2.5 * PI.ln() - 0.5 * nf.ln() + nf * (PI * PI / 4.0).ln(),
    ))
}

pub fn edeg_lines_asymptotic(n: usize) -> Result<f64> {
    Ok(log_edeg_lines_asymptotic(n)?.exp())
}

/// Zonoid-volume route to `edeg G(k,n)`.
#[derive(Debug, Clone, Copy)]
pub enum GeneralMethod<'a> {
    /// Needs `k = 2` or `n − k = 2`.
    ZonoidQuadrature { profile: &'a RadialProfile2, quad_points: usize },
    /// Needs `k(n−k) ≤ 36`.
    ZonoidVitale { cfg: McConfig, samples: u64 },
}

/// `|G(k,n)| · N!/2^N · |C(k, n−k)|` with `N = k(n−k)`, reduced first to
/// `k ≤ n−k` via `A ↦ A^⊥`.
pub fn edeg_general(k: usize, n: usize, method: GeneralMethod<'_>) -> Result<EdegResult> {
    check_kn(k, n)?;
    let (kk, m) = (k.min(n - k), k.max(n - k));
    let big_n = kk * m;
    let log_pref = log_vol_grassmann_real(kk, n)?.ln() + log_gamma(big_n as f64 + 1.0)?
        - big_n as f64 * std::f64::consts::LN_2;
    match method {
        GeneralMethod::ZonoidQuadrature { profile, quad_points } => {
            if kk != 2 {
                return Err(Error::Unsupported(format!(
                    "zonoid quadrature needs k = 2 or n - k = 2, got ({k},{n})"
                )));
            }
            if m < 2 {
                return Err(Error::Unsupported("zonoid quadrature needs n >= 4".into()));
            }
            let q = log_vol_c_quadrature(m, profile, quad_points)?;
            Ok(EdegResult {
                rel_error: q.rel_error,
                ..EdegResult::closed(k, n, LogValue::new(log_pref) * q.log_value, EdegMethod::Quadrature)
            })
        }
        GeneralMethod::ZonoidVitale { cfg, samples } => {
            if big_n > MAX_VITALE_DIM {
                return Err(Error::Unsupported(format!(
                    "zonoid Vitale needs k(n-k) <= {MAX_VITALE_DIM}, got {big_n}"
                )));
            }
            let e = vol_c_vitale_mc(kk, m, cfg, samples)?;
            if e.value <= 0.0 {
                return Err(Error::Numerical("non-positive zonoid volume estimate".into()));
            }
            Ok(EdegResult {
                k,
                n,
                log_value: LogValue::new(log_pref + e.value.ln()),
                method: EdegMethod::ZonoidMc,
                rel_error: e.stderr / e.value,
                n_samples: e.n_samples,
                degenerate_count: e.degenerate_count,
            })
        }
    }
}

/// `|G(k,n)|/|RP^N| · (√(π/2) ρ_k/√k)^N`, `N = k(n−k)`.
pub fn edeg_upper_bound(k: usize, n: usize) -> Result<EdegResult> {
    check_kn(k, n)?;
    let big_n = k * (n - k);
    let log_b = log_vol_grassmann_real(k, n)?.ln() - log_vol_rp(big_n).ln()
        + big_n as f64 * (0.5 * (PI / 2.0).ln() + log_rho(k) - 0.5 * (k as f64).ln());
    Ok(EdegResult::closed(k, n, LogValue::new(log_b), EdegMethod::UpperBound))
}

/// `ε_k = log_k(π ρ_k² / 2)`.
pub fn epsilon_k(k: usize) -> Result<f64> {
    if k < 2 {
        return Err(domain("epsilon_k", format!("k = {k} < 2")));
    }
    Ok(((PI / 2.0).ln() + 2.0 * log_rho(k)) / (k as f64).ln())
}

/// `kn · log(√π Γ((k+1)/2) / Γ(k/2))`.
pub fn log_edeg_leading(k: usize, n: usize) -> Result<f64> {
    if k == 0 {
        return Err(domain("log_edeg_leading", "k must be positive"));
    }
    let kf = k as f64;
    Ok(kf * n as f64 * (0.5 * PI.ln() + log_gamma((kf + 1.0) / 2.0)? - log_gamma(kf / 2.0)?))
}

/// Local data of `∫ e^{−λ a(t)} b(t) dt` at the minimizer of `a`:
/// `a(t) − a_min ≈ a0 τ^μ`, `b(t) ≈ b0 τ^{ν−1}` with `τ` the distance to
/// the minimizing endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceProblem {
    pub a_at_min: f64,
    pub a0: f64,
    pub mu: f64,
    pub b0: f64,
    pub nu: f64,
    pub min_at_right_endpoint: bool,
}

impl LaplaceProblem {
    fn validate(&self) -> Result<()> {
        if self.a0 == 0.0 || self.b0 == 0.0 || !(self.mu > 0.0) || !(self.nu >= 1.0) {
            return Err(domain("laplace", "need a0 != 0, b0 != 0, mu > 0, nu >= 1"));
        }
        Ok(())
    }

    /// The problem arising from the lines integral (minimum at `π/4`).
    pub fn lines() -> Self {
        LaplaceProblem {
            a_at_min: 4.0 * std::f64::consts::LN_2,
            a0: 3.0,
            mu: 2.0,
            b0: 8.0,
            nu: 2.0,
            min_at_right_endpoint: true,
        }
    }
}

/// `ln` of the leading term without the factor `e^{−λ a_min}`.
fn log_leading_reduced(p: &LaplaceProblem, lambda: f64) -> Result<f64> {
    let r = p.nu / p.mu;
    Ok(-r * lambda.ln() + p.b0.abs().ln() + log_gamma(r)? - r * p.a0.abs().ln() - p.mu.ln())
}

/// `e^{−λ a(t1)} λ^{−ν/μ} b0 Γ(ν/μ) / (a0^{ν/μ} μ)`.
pub fn laplace_leading(p: &LaplaceProblem, lambda: f64) -> Result<f64> {
    p.validate()?;
    if !(lambda > 0.0) {
        return Err(domain("laplace_leading", "lambda must be positive"));
    }
    let sign = p.b0.signum();
    Ok(sign * (log_leading_reduced(p, lambda)? - lambda * p.a_at_min).exp())
}

/// One line of a [`laplace_validate`] table. Both values omit the common
/// factor `e^{−λ a_min}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceRow {
    pub lambda: f64,
    pub quadrature: f64,
    pub leading: f64,
    pub rel_error: f64,
}

/// Compares the leading term with adaptive quadrature of
/// `∫_{t1}^{t2} e^{−λ (a(t) − a_min)} b(t) dt` on each `λ`.
pub fn laplace_validate<A, B>(
    a: A,
    b: B,
    t1: f64,
    t2: f64,
    p: &LaplaceProblem,
    lambda_grid: &[f64],
) -> Result<Vec<LaplaceRow>>
where
    A: Fn(f64) -> f64,
    B: Fn(f64) -> f64,
{
    p.validate()?;
    if !(t1 < t2) {
        return Err(domain("laplace_validate", "need t1 < t2"));
    }
    lambda_grid
        .iter()
        .map(|&lambda| {
            if !(lambda > 0.0) {
                return Err(domain("laplace_validate", "lambda must be positive"));
            }
            let q = adaptive_gk(
                |t| (-lambda * (a(t) - p.a_at_min)).exp() * b(t),
                t1,
                t2,
                0.0,
                1e-12,
                4000,
            )?;
            let leading = p.b0.signum() * log_leading_reduced(p, lambda)?.exp();
            Ok(LaplaceRow {
                lambda,
                quadrature: q.value,
                leading,
                rel_error: (q.value / leading - 1.0).abs(),
            })
        })
        .collect()
}
