//! Calculators for the RGD error guarantees.
//!
//! All restricted isometry constants are inputs. Nothing here estimates them;
//! use [`crate::sensing::rip_probe`] for an empirical lower bound.
//!
//! With `θ = (4δ_2r + 2δ_3r)/(1 − δ_2r)`, `η = 4δ_2r √r κ`,
//! `φ = 4√(2r) λ/σ_r` and `ω = 2√(2r) λ/(1 − δ_2r)`, the per-step factors are
//!
//! ```text
//! γ_0 = θ + η + φ
//! γ_k = θ + (η + φ) γ_0 ⋯ γ_{k−1} + φ/(1 − δ_2r) · μ_k,   μ_1 = 1, μ_{k+1} = 1 + γ_k μ_k
//! ```
//!
//! and `‖X_k − ρ‖_F ≤ ‖X_0 − ρ‖_F γ_0 ⋯ γ_{k−1} + ω μ_k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub r: usize,
    /// `σ_1 / σ_r`.
    pub kappa: f64,
    pub sigma_r: f64,
    pub sigma_1: f64,
    /// Noise level with `‖A†(z)‖ ≤ λ`.
    pub lambda: f64,
    pub delta_2r: f64,
    pub delta_3r: f64,
    /// `‖ρ‖_F`.
    pub rho_frob: f64,
    /// `‖X_0 − ρ‖_F`.
    pub init_err: f64,
}

impl BoundInputs {
    /// Fills `kappa` from the singular values.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        r: usize,
        sigma_1: f64,
        sigma_r: f64,
        lambda: f64,
        delta_2r: f64,
        delta_3r: f64,
        rho_frob: f64,
        init_err: f64,
    ) -> Result<Self> {
        let b = BoundInputs {
            r,
            kappa: sigma_1 / sigma_r,
            sigma_r,
            sigma_1,
            lambda,
            delta_2r,
            delta_3r,
            rho_frob,
            init_err,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::BoundDomain(msg));
        if self.r == 0 {
            return bad("rank must be at least 1".into());
        }
        for (name, d) in [("delta_2r", self.delta_2r), ("delta_3r", self.delta_3r)] {
            if !(0.0..1.0).contains(&d) {
                return bad(format!("{name} = {d} must lie in [0, 1)"));
            }
        }
        if !(self.lambda >= 0.0) {
            return bad(format!("lambda = {} must be non-negative", self.lambda));
        }
        if !(self.sigma_r > 0.0) || !(self.sigma_1 >= self.sigma_r) {
            return bad(format!(
                "singular values must satisfy σ_1 ≥ σ_r > 0 (got {}, {})",
                self.sigma_1, self.sigma_r
            ));
        }
        let kappa = self.sigma_1 / self.sigma_r;
        if (self.kappa - kappa).abs() > 1e-9 * kappa {
            return bad(format!("kappa = {} but σ_1/σ_r = {kappa}", self.kappa));
        }
        if !(self.rho_frob >= 0.0) || !(self.init_err >= 0.0) {
            return bad("norms must be non-negative".into());
        }
        Ok(())
    }

    pub fn theta(&self) -> f64 {
        (4.0 * self.delta_2r + 2.0 * self.delta_3r) / (1.0 - self.delta_2r)
    }

    pub fn eta(&self) -> f64 {
        4.0 * self.delta_2r * (self.r as f64).sqrt() * self.kappa
    }

    pub fn phi(&self) -> f64 {
        4.0 * (2.0 * self.r as f64).sqrt() * self.lambda / self.sigma_r
    }

    pub fn omega(&self) -> f64 {
        2.0 * (2.0 * self.r as f64).sqrt() * self.lambda / (1.0 - self.delta_2r)
    }

    /// Initialization guarantee `‖X_0 − ρ‖_F ≤ 2δ_2r ‖ρ‖_F + 2√(2r) λ`.
    pub fn init_bound(&self) -> f64 {
        2.0 * self.delta_2r * self.rho_frob + 2.0 * (2.0 * self.r as f64).sqrt() * self.lambda
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSeries {
    /// `γ_0, …, γ_{steps−1}`.
    pub gammas: Vec<f64>,
    /// `μ_1, …, μ_steps`.
    pub mus: Vec<f64>,
    /// Largest computed `γ`, when it is below 1.
    pub gamma_bar: Option<f64>,
}

impl GammaSeries {
    /// The iterate-error bound after `k` steps:
    /// `‖X_0 − ρ‖_F γ_0 ⋯ γ_{k−1} + ω μ_k` (`k = 0` gives `‖X_0 − ρ‖_F`).
    pub fn iterate_bound(&self, inputs: &BoundInputs, k: usize) -> Option<f64> {
        if k == 0 {
            return Some(inputs.init_err);
        }
        if k > self.gammas.len() || k > self.mus.len() {
            return None;
        }
        let prod: f64 = self.gammas[..k].iter().product();
        Some(inputs.init_err * prod + inputs.omega() * self.mus[k - 1])
    }
}

/// Computes `steps` terms of the `γ` recursion.
pub fn gamma_recursion(inputs: &BoundInputs, steps: usize) -> Result<GammaSeries> {
    inputs.validate()?;
    if steps == 0 {
        return Err(Error::BoundDomain("steps must be at least 1".into()));
    }
    let theta = inputs.theta();
    let drift = inputs.eta() + inputs.phi();
    let noise = inputs.phi() / (1.0 - inputs.delta_2r);

    let mut gammas = Vec::with_capacity(steps);
    let mut mus = Vec::with_capacity(steps);
    gammas.push(theta + drift);
    let mut prod = gammas[0];
    let mut mu = 1.0;
    mus.push(mu);
    for _ in 1..steps {
        let g = theta + drift * prod + noise * mu;
        gammas.push(g);
        prod *= g;
        mu = 1.0 + g * mu;
        mus.push(mu);
    }
    let sup = gammas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(GammaSeries {
        gamma_bar: (sup < 1.0).then_some(sup),
        gammas,
        mus,
    })
}

/// Sufficiency check for a universal contraction `γ̄`:
/// `A_k = θ + (η + φ) γ_0 ⋯ γ_{k−1} + φ/(1 − δ_3r) · 1/(1 − γ̄)`.
/// If `A_k < γ̄` and `γ_0 … γ_{k−1} < γ̄`, every later `γ` stays below `γ̄`.
pub fn contraction_certificate(inputs: &BoundInputs, gamma_bar: f64, k: usize) -> Result<f64> {
    inputs.validate()?;
    check_gamma_bar(gamma_bar)?;
    let series = gamma_recursion(inputs, k.max(1))?;
    let prod: f64 = series.gammas[..k].iter().product();
    Ok(inputs.theta()
        + (inputs.eta() + inputs.phi()) * prod
        + inputs.phi() / (1.0 - inputs.delta_3r) / (1.0 - gamma_bar))
}

fn check_gamma_bar(gamma_bar: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma_bar) {
        return Err(Error::BoundDomain(format!("gamma_bar = {gamma_bar} must lie in [0, 1)")));
    }
    Ok(())
}

/// `‖X_0 − ρ‖_F γ̄^k + 2√(2r) λ / ((1 − δ_3r)(1 − γ̄))`.
pub fn error_bound_series(inputs: &BoundInputs, gamma_bar: f64, k: u32) -> Result<f64> {
    inputs.validate()?;
    check_gamma_bar(gamma_bar)?;
    Ok(inputs.init_err * gamma_bar.powi(k as i32) + asymptotic_error(inputs, gamma_bar)?)
}

/// The `k → ∞` limit of [`error_bound_series`].
pub fn asymptotic_error(inputs: &BoundInputs, gamma_bar: f64) -> Result<f64> {
    check_gamma_bar(gamma_bar)?;
    Ok(2.0 * (2.0 * inputs.r as f64).sqrt() * inputs.lambda / ((1.0 - inputs.delta_3r) * (1.0 - gamma_bar)))
}

/// Iterations sufficient for relative error `C_2 √r λ/‖ρ‖_F`:
/// `(ln(2C_0‖ρ‖_F/(rκλ) + 2√2) − ln(C_2 − C_1)) / ln(1/γ̄)`. Real-valued; the
/// caller rounds up.
pub fn iteration_estimate(inputs: &BoundInputs, gamma_bar: f64, c0: f64, c1: f64, c2: f64) -> Result<f64> {
    inputs.validate()?;
    check_open_gamma(gamma_bar)?;
    if !(c2 > c1) || !(c0 > 0.0) {
        return Err(Error::BoundDomain(format!(
            "constants need C_0 > 0 and C_2 > C_1 (got {c0}, {c1}, {c2})"
        )));
    }
    if inputs.lambda == 0.0 {
        return Err(Error::BoundDomain(
            "lambda = 0; use noiseless_iteration_estimate".into(),
        ));
    }
    let r = inputs.r as f64;
    let lead = (2.0 * c0 * inputs.rho_frob / (r * inputs.kappa * inputs.lambda) + 2.0 * 2f64.sqrt()).ln();
    Ok((lead - (c2 - c1).ln()) / (1.0 / gamma_bar).ln())
}

/// Noiseless branch: `ln(C_0/(√r κ ε)) / ln(1/γ̄)` iterations for relative
/// error `ε`.
pub fn noiseless_iteration_estimate(r: usize, kappa: f64, epsilon: f64, gamma_bar: f64, c0: f64) -> Result<f64> {
    check_open_gamma(gamma_bar)?;
    if r == 0 || !(kappa >= 1.0) || !(epsilon > 0.0) || !(c0 > 0.0) {
        return Err(Error::BoundDomain("need r ≥ 1, κ ≥ 1, ε > 0, C_0 > 0".into()));
    }
    Ok((c0 / ((r as f64).sqrt() * kappa * epsilon)).ln() / (1.0 / gamma_bar).ln())
}

fn check_open_gamma(gamma_bar: f64) -> Result<()> {
    if !(gamma_bar > 0.0 && gamma_bar < 1.0) {
        return Err(Error::BoundDomain(format!("gamma_bar = {gamma_bar} must lie in (0, 1)")));
    }
    Ok(())
}
