//! Riemannian gradient descent over Hermitian rank-`r` matrices.
//!
//! Each iteration, starting from `X_0 = H_r(A†(y))`:
//!
//! 1. `G = A†(y − A(X))`, the negative Euclidean gradient of `½‖y − A(X)‖²`;
//! 2. project onto the tangent space at `X = UΛU†`:
//!    `P_T(G) = P_U G + G P_U − P_U G P_U`;
//! 3. exact line search `α = ‖P_T G‖_F² / ‖A P_T G‖²`;
//! 4. `X ← H_r(X + α P_T G)`.
//!
//! Iterates stay in Hermitian eigen-form (`V = U`, signed eigenvalues).
//! The retraction never forms a `d × d` matrix: `X + α P_T G` lives in the
//! span of `[U | Z]`, so one QR of a `d × 2r` block and a `2r × 2r`
//! eigenproblem suffice.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::factor::RankRFactor;
use crate::linalg::{hermitian_eigen, max_asymmetry, order_by_magnitude};
use crate::sensing::SensingEnsemble;
use crate::trace::{IterRecord, SolverTrace, StopReason};
use crate::C64;

const HERMITIAN_TOL: f64 = 1e-8;

/// Best rank-`r` approximation of a Hermitian matrix: the `r` eigenpairs of
/// largest `|λ|`, ordered by decreasing magnitude. Ties keep the order of
/// the underlying eigensolver.
pub fn hard_threshold(m: &DMatrix<C64>, r: usize) -> Result<RankRFactor> {
    if !m.is_square() {
        return Err(Error::Dimension {
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    let asym = max_asymmetry(m);
    if asym > HERMITIAN_TOL {
        return Err(Error::NotHermitian(asym));
    }
    let (vals, vecs) = hermitian_eigen(m);
    let (u, lambdas) = truncate_eigen(&vals, &vecs, r);
    RankRFactor::new(u, lambdas)
}

fn truncate_eigen(vals: &DVector<f64>, vecs: &DMatrix<C64>, r: usize) -> (DMatrix<C64>, DVector<f64>) {
    let keep: Vec<usize> = order_by_magnitude(vals).into_iter().take(r).collect();
    let u = vecs.select_columns(keep.iter());
    let lambdas = DVector::from_iterator(keep.len(), keep.iter().map(|&i| vals[i]));
    (u, lambdas)
}

/// `X_0 = H_r(A†(y))`.
pub fn init(y: &DVector<f64>, ensemble: &SensingEnsemble, r: usize) -> Result<RankRFactor> {
    check_rank(r, ensemble.dim())?;
    hard_threshold(&ensemble.adjoint(y)?, r)
}

fn check_rank(r: usize, d: usize) -> Result<()> {
    if r == 0 || r > d {
        return Err(Error::InvalidArgument(format!("rank {r} out of range for d = {d}")));
    }
    Ok(())
}

/// `G = A†(y − A(X))`.
pub fn residual_gradient(y: &DVector<f64>, ensemble: &SensingEnsemble, x: &RankRFactor) -> Result<DMatrix<C64>> {
    let ax = ensemble.forward(x)?;
    if ax.len() != y.len() {
        return Err(Error::Dimension {
            expected: ax.len(),
            actual: y.len(),
        });
    }
    ensemble.adjoint(&(y - ax))
}

/// `½‖y − A(X)‖²`.
pub fn objective(y: &DVector<f64>, ensemble: &SensingEnsemble, x: &RankRFactor) -> Result<f64> {
    Ok(0.5 * (y - ensemble.forward(x)?).norm_squared())
}

/// An element `U C U† + Z U† + U Z†` of the tangent space at `U`, with `C`
/// Hermitian (`r × r`) and `Z ⟂ U` (`d × r`).
#[derive(Debug, Clone)]
pub struct TangentElement {
    u: DMatrix<C64>,
    c: DMatrix<C64>,
    z: DMatrix<C64>,
}

impl TangentElement {
    pub fn base(&self) -> &DMatrix<C64> {
        &self.u
    }

    pub fn core(&self) -> &DMatrix<C64> {
        &self.c
    }

    pub fn normal(&self) -> &DMatrix<C64> {
        &self.z
    }

    /// `‖C‖_F² + 2‖Z‖_F²`; the three terms are mutually orthogonal.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.c.norm_squared() + 2.0 * self.z.norm_squared()
    }

    /// Factors `(L, R)` with `L R†` equal to the element:
    /// `L = [U | Z]`, `R = [U C + Z | U]`.
    pub fn lowrank_factors(&self) -> (DMatrix<C64>, DMatrix<C64>) {
        let r = self.u.ncols();
        let d = self.u.nrows();
        let mut left = DMatrix::zeros(d, 2 * r);
        left.columns_mut(0, r).copy_from(&self.u);
        left.columns_mut(r, r).copy_from(&self.z);
        let mut right = DMatrix::zeros(d, 2 * r);
        right.columns_mut(0, r).copy_from(&(&self.u * &self.c + &self.z));
        right.columns_mut(r, r).copy_from(&self.u);
        (left, right)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let (l, r) = self.lowrank_factors();
        l * r.adjoint()
    }
}

/// `P_T(G) = P_U G + G P_U − P_U G P_U`, from `GU` alone.
pub fn tangent_project(x: &RankRFactor, g: &DMatrix<C64>) -> Result<TangentElement> {
    if g.nrows() != x.dim() || g.ncols() != x.dim() {
        return Err(Error::Dimension {
            expected: x.dim(),
            actual: g.nrows(),
        });
    }
    let u = x.u();
    let gu = g * u;
    let mut c = u.adjoint() * &gu;
    // C is Hermitian up to rounding
    c = (&c + c.adjoint()) * C64::new(0.5, 0.0);
    let z = gu - u * &c;
    Ok(TangentElement { u: u.clone(), c, z })
}

/// Exact line search along the projected direction:
/// `α = ‖P_T G‖_F² / ‖A P_T G‖²`. Returns `None` for a zero direction.
pub fn step_size(ensemble: &SensingEnsemble, ptg: &TangentElement) -> Result<Option<f64>> {
    let num = ptg.frobenius_norm_sq();
    if num == 0.0 {
        return Ok(None);
    }
    let (l, r) = ptg.lowrank_factors();
    let den = ensemble.forward_lowrank(&l, &r)?.norm_squared();
    if den == 0.0 || !den.is_finite() {
        return Ok(None);
    }
    Ok(Some(num / den))
}

/// `H_r(X + α P_T G)` via a `d × 2r` QR and a `2r × 2r` eigenproblem.
pub fn retract(x: &RankRFactor, ptg: &TangentElement, alpha: f64, r: usize) -> Result<RankRFactor> {
    check_rank(r, x.dim())?;
    if ptg.u.shape() != x.u().shape() {
        return Err(Error::Dimension {
            expected: x.width(),
            actual: ptg.u.ncols(),
        });
    }
    let d = x.dim();
    let w = x.width();
    let u = x.u();

    let mut stacked = DMatrix::zeros(d, 2 * w);
    stacked.columns_mut(0, w).copy_from(u);
    stacked.columns_mut(w, w).copy_from(&ptg.z);
    // span(B) ⊇ span([U | Z]); B stays orthonormal even when Z is rank deficient
    let basis = stacked.qr().q();

    let bu = basis.adjoint() * u;
    let bz = basis.adjoint() * &ptg.z;
    let a = C64::new(alpha, 0.0);
    let mut inner = &ptg.c * a;
    for (i, &l) in x.lambdas().iter().enumerate() {
        inner[(i, i)] += C64::new(l, 0.0);
    }
    let cross = &bz * bu.adjoint() * a;
    let mut core = &bu * inner * bu.adjoint() + &cross + cross.adjoint();
    core = (&core + core.adjoint()) * C64::new(0.5, 0.0);

    let (vals, vecs) = hermitian_eigen(&core);
    let (v, lambdas) = truncate_eigen(&vals, &vecs, r);
    RankRFactor::new(basis * v, lambdas)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub rank: usize,
    pub max_iters: usize,
    /// Stop when `‖X_{k+1} − X_k‖_F / ‖X_k‖_F` drops below this.
    pub stop_tol: f64,
    /// Stop when the objective drops below this.
    pub objective_floor: f64,
    /// Record `‖X_k − ρ‖_F²` when a truth is supplied.
    pub record_truth_error: bool,
    /// Fill the `wall_ms` column. Off by default so traces are reproducible.
    pub record_timing: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rank: 1,
            max_iters: 300,
            stop_tol: 1e-7,
            objective_floor: 1e-14,
            record_truth_error: true,
            record_timing: false,
        }
    }
}

impl SolverOptions {
    pub fn with_rank(rank: usize) -> Self {
        SolverOptions {
            rank,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        if !(self.stop_tol > 0.0) {
            return Err(Error::InvalidArgument("stop_tol must be positive".into()));
        }
        if self.rank == 0 {
            return Err(Error::InvalidArgument("rank must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub estimate: RankRFactor,
    pub trace: SolverTrace,
}

fn collapsed(x: &RankRFactor) -> bool {
    let top = x.lambdas().iter().fold(0.0f64, |a, l| a.max(l.abs()));
    top == 0.0 || x.numerical_rank(1e-14 * top) < x.width()
}

/// Runs the full iteration. `truth` enables the error column.
pub fn solve(
    y: &DVector<f64>,
    ensemble: &SensingEnsemble,
    opts: &SolverOptions,
    truth: Option<&RankRFactor>,
) -> Result<SolveOutcome> {
    opts.validate()?;
    if y.len() != ensemble.len() {
        return Err(Error::Dimension {
            expected: ensemble.len(),
            actual: y.len(),
        });
    }
    let start = Instant::now();
    let truth = truth.filter(|_| opts.record_truth_error);
    let err = |x: &RankRFactor| truth.map(|t| x.frobenius_dist_sq(t));
    let wall = |start: &Instant| opts.record_timing.then(|| start.elapsed().as_secs_f64() * 1e3);

    let mut trace = SolverTrace::new("rgd");
    let mut x = init(y, ensemble, opts.rank)?;
    let mut residual = y - ensemble.forward(&x)?;
    let mut obj = 0.5 * residual.norm_squared();
    trace.rank_collapse |= collapsed(&x);
    trace.records.push(IterRecord {
        iter: 0,
        objective: obj,
        step_size: None,
        frob_err_sq: err(&x),
        wall_ms: wall(&start),
    });
    if obj < opts.objective_floor {
        trace.stop_reason = StopReason::ObjectiveFloor;
        return Ok(SolveOutcome { estimate: x, trace });
    }

    trace.stop_reason = StopReason::MaxIters;
    for iter in 1..=opts.max_iters {
        let g = ensemble.adjoint(&residual)?;
        let ptg = tangent_project(&x, &g)?;
        let Some(alpha) = step_size(ensemble, &ptg)? else {
            trace.stop_reason = StopReason::ZeroDirection;
            break;
        };
        let next = retract(&x, &ptg, alpha, opts.rank)?;
        let change = next.frobenius_dist_sq(&x).sqrt();
        let norm = x.frobenius_norm();
        let rel_change = if norm > 0.0 { change / norm } else { change };

        x = next;
        residual = y - ensemble.forward(&x)?;
        obj = 0.5 * residual.norm_squared();
        trace.rank_collapse |= collapsed(&x);
        trace.records.push(IterRecord {
            iter,
            objective: obj,
            step_size: Some(alpha),
            frob_err_sq: err(&x),
            wall_ms: wall(&start),
        });

        if !obj.is_finite() {
            trace.stop_reason = StopReason::NonFinite;
            break;
        }
        if obj < opts.objective_floor {
            trace.stop_reason = StopReason::ObjectiveFloor;
            break;
        }
        if rel_change < opts.stop_tol {
            trace.stop_reason = StopReason::Converged;
            break;
        }
    }
    Ok(SolveOutcome { estimate: x, trace })
}
