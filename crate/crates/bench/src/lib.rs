//! Fixtures shared by the criterion benches in `benches/`.

use nalgebra::DVector;
use qtomo_core::{rgd, simulator, DensityState, RankRFactor, Result, SensingEnsemble, Shots, StateKind, TangentElement};

/// A measured state plus everything one RGD step needs.
pub struct Fixture {
    pub state: DensityState,
    pub ensemble: SensingEnsemble,
    pub y: DVector<f64>,
    pub x0: RankRFactor,
}

impl Fixture {
    /// GHZ state on `k` qubits, `m` sampled Paulis, `shots` per Pauli.
    pub fn ghz(k: usize, m: usize, shots: u64, seed: u64) -> Result<Self> {
        let state = qtomo_core::state::make_state(StateKind::Ghz, k, 1, 1.0, seed)?;
        let ensemble = SensingEnsemble::sample(k, m, seed)?;
        let y = simulator::build_measurement(&state, &ensemble, Shots::Sampled(shots), seed + 1)?.y;
        let x0 = rgd::init(&y, &ensemble, 1)?;
        Ok(Fixture { state, ensemble, y, x0 })
    }

    pub fn tangent(&self) -> Result<TangentElement> {
        let g = rgd::residual_gradient(&self.y, &self.ensemble, &self.x0)?;
        rgd::tangent_project(&self.x0, &g)
    }

    /// One full iteration: gradient, projection, step size, retraction.
    pub fn step(&self) -> Result<RankRFactor> {
        let ptg = self.tangent()?;
        let alpha = rgd::step_size(&self.ensemble, &ptg)?.unwrap_or(0.0);
        rgd::retract(&self.x0, &ptg, alpha, 1)
    }
}
