//! Factored-gradient baselines over `ρ = A A†`, `A ∈ C^{d×r}`, `‖A‖_F² ≤ 1`.
//!
//! `fgd_step` is projected gradient descent on `f(A) = ½‖y − 𝒜(AA†)‖²` with
//! `∇_A f = −2 𝒜†(y − 𝒜(AA†)) A` (gradient for the real inner product
//! `Re Tr(P† Q)`). The momentum baseline is the heavy-ball two-sequence form
//!
//! ```text
//! Z_k     = A_k + μ (A_k − A_{k−1})
//! A_{k+1} = Π(Z_k − η ∇_A f(Z_k))
//! ```
//!
//! which is how MIFGD is implemented here; traces carry the method name
//! `mifgd-heavy-ball`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::factor::RankRFactor;
use crate::rgd;
use crate::sensing::SensingEnsemble;
use crate::trace::{IterRecord, SolverTrace, StopReason};
use crate::C64;

/// Objective growth (relative to the initial value) that counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 10.0;

pub const METHOD_NAME: &str = "mifgd-heavy-ball";

#[derive(Debug, Clone, PartialEq)]
pub struct FactorIterate {
    pub a: DMatrix<C64>,
    pub prev_a: DMatrix<C64>,
    pub eta: f64,
    pub mu: f64,
}

impl FactorIterate {
    pub fn new(a: DMatrix<C64>, eta: f64, mu: f64) -> Self {
        let a = project_ball(a);
        FactorIterate {
            prev_a: a.clone(),
            a,
            eta,
            mu,
        }
    }

    /// Starts from a Hermitian factorization: `A_0 = U diag(√max(λ, 0))`.
    pub fn from_factor(x: &RankRFactor, eta: f64, mu: f64) -> Self {
        let mut a = x.u().clone();
        for (mut col, &l) in a.column_iter_mut().zip(x.lambdas().iter()) {
            col *= C64::new(l.max(0.0).sqrt(), 0.0);
        }
        Self::new(a, eta, mu)
    }

    /// `A A†` in dense form.
    pub fn density(&self) -> DMatrix<C64> {
        &self.a * self.a.adjoint()
    }
}

/// Projection onto `{‖A‖_F ≤ 1}`.
pub fn project_ball(a: DMatrix<C64>) -> DMatrix<C64> {
    let n = a.norm();
    if n > 1.0 {
        a / C64::new(n, 0.0)
    } else {
        a
    }
}

/// `½‖y − 𝒜(AA†)‖²`.
pub fn factored_objective(y: &DVector<f64>, ensemble: &SensingEnsemble, a: &DMatrix<C64>) -> Result<f64> {
    Ok(0.5 * (y - ensemble.forward_lowrank(a, a)?).norm_squared())
}

/// `∇_A f = −2 𝒜†(y − 𝒜(AA†)) A`.
pub fn factored_gradient(y: &DVector<f64>, ensemble: &SensingEnsemble, a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let residual = y - ensemble.forward_lowrank(a, a)?;
    if residual.len() != ensemble.len() {
        return Err(Error::Dimension {
            expected: ensemble.len(),
            actual: residual.len(),
        });
    }
    let g = ensemble.adjoint(&residual)?;
    Ok(g * a * C64::new(-2.0, 0.0))
}

/// `‖AA† − ρ‖_F²` from the factors, in O(d·r²).
pub fn factored_dist_sq(a: &DMatrix<C64>, truth: &RankRFactor) -> f64 {
    let gram = a.adjoint() * a;
    let proj = truth.u().adjoint() * a;
    let cross: f64 = truth
        .lambdas()
        .iter()
        .enumerate()
        .map(|(i, &l)| l * proj.row(i).norm_squared())
        .sum();
    (gram.norm_squared() + truth.frobenius_norm_sq() - 2.0 * cross).max(0.0)
}

fn gradient_step(
    y: &DVector<f64>,
    ensemble: &SensingEnsemble,
    point: &DMatrix<C64>,
    eta: f64,
) -> Result<DMatrix<C64>> {
    let grad = factored_gradient(y, ensemble, point)?;
    Ok(project_ball(point - grad * C64::new(eta, 0.0)))
}

/// `A ← Π(A − η ∇_A f(A))`.
pub fn fgd_step(it: &FactorIterate, y: &DVector<f64>, ensemble: &SensingEnsemble) -> Result<FactorIterate> {
    let a = gradient_step(y, ensemble, &it.a, it.eta)?;
    Ok(FactorIterate {
        prev_a: it.a.clone(),
        a,
        eta: it.eta,
        mu: it.mu,
    })
}

/// One heavy-ball step; with `μ = 0` it equals [`fgd_step`].
pub fn mifgd_step(it: &FactorIterate, y: &DVector<f64>, ensemble: &SensingEnsemble) -> Result<FactorIterate> {
    let z = &it.a + (&it.a - &it.prev_a) * C64::new(it.mu, 0.0);
    let a = gradient_step(y, ensemble, &z, it.eta)?;
    Ok(FactorIterate {
        prev_a: it.a.clone(),
        a,
        eta: it.eta,
        mu: it.mu,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOptions {
    pub rank: usize,
    pub eta: f64,
    pub mu: f64,
    pub iters: usize,
    pub record_timing: bool,
}

impl BaselineOptions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.mu) {
            return Err(Error::InvalidArgument(format!("momentum {} must lie in [0, 1)", self.mu)));
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidArgument(format!("step size {} must be positive", self.eta)));
        }
        if self.rank == 0 || self.iters == 0 {
            return Err(Error::InvalidArgument("rank and iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub iterate: FactorIterate,
    pub trace: SolverTrace,
}

impl BaselineOutcome {
    pub fn diverged(&self) -> bool {
        self.trace.stop_reason == StopReason::Diverged
    }
}

/// Runs the momentum baseline. The starting point is the RGD initializer
/// `H_r(𝒜†(y))` unless `start` is given.
pub fn mifgd_solve(
    y: &DVector<f64>,
    ensemble: &SensingEnsemble,
    opts: &BaselineOptions,
    start: Option<&RankRFactor>,
    truth: Option<&RankRFactor>,
) -> Result<BaselineOutcome> {
    opts.validate()?;
    let clock = Instant::now();
    let wall = || opts.record_timing.then(|| clock.elapsed().as_secs_f64() * 1e3);
    let x0 = match start {
        Some(x) => x.clone(),
        None => rgd::init(y, ensemble, opts.rank)?,
    };
    let mut it = FactorIterate::from_factor(&x0, opts.eta, opts.mu);
    let mut trace = SolverTrace::new(METHOD_NAME);
    let initial = factored_objective(y, ensemble, &it.a)?;
    trace.records.push(IterRecord {
        iter: 0,
        objective: initial,
        step_size: None,
        frob_err_sq: truth.map(|t| factored_dist_sq(&it.a, t)),
        wall_ms: wall(),
    });
    trace.stop_reason = StopReason::MaxIters;
    for iter in 1..=opts.iters {
        it = mifgd_step(&it, y, ensemble)?;
        let obj = factored_objective(y, ensemble, &it.a)?;
        trace.records.push(IterRecord {
            iter,
            objective: obj,
            step_size: Some(opts.eta),
            frob_err_sq: truth.map(|t| factored_dist_sq(&it.a, t)),
            wall_ms: wall(),
        });
        if !obj.is_finite() {
            trace.stop_reason = StopReason::NonFinite;
            break;
        }
        if obj > DIVERGENCE_FACTOR * initial {
            trace.stop_reason = StopReason::Diverged;
            break;
        }
    }
    Ok(BaselineOutcome { iterate: it, trace })
}
