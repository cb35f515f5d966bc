//! The left-invariant magnetic Hamiltonian on `Γ\Sol`.
//!
//! With the left-invariant momenta `M = (eᶻp_x, e⁻ᶻp_y, p_z)` the Hamiltonian
//! is `H = ½[(M_x + 1)² + M_y² + M_z²]`, so each level `Σ_k = H⁻¹(k)` is a
//! sphere of radius `√(2k)` about `(−1, 0, 0)` in momentum space. The sphere
//! encloses the fiber origin exactly when `k > ½`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Hamiltonian, Trajectory};
use crate::error::{LabError, Result};
use crate::geometry::{BasePoint, CoverGeometry, SolQuotient};
use crate::phase::{CotangentPoint, PhaseVector};

/// Energy level `k` on a Sol quotient.
#[derive(Debug, Clone, PartialEq)]
pub struct SolLevel {
    pub k: f64,
    pub manifold: SolQuotient,
}

impl SolLevel {
    pub fn new(k: f64, manifold: SolQuotient) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(LabError::InvalidInput(format!("energy level must be positive, got {k}")));
        }
        Ok(Self { k, manifold })
    }

    /// Whether the momentum sphere encloses the fiber origin.
    pub fn is_starshaped(&self) -> bool {
        encloses_origin(self.k)
    }

    /// Radius `√(2k)` of the momentum sphere.
    pub fn radius(&self) -> f64 {
        (2.0 * self.k).sqrt()
    }

    /// The point of `Σ_k` over `q` with momentum `(−1,0,0) + √(2k) u`.
    pub fn point(&self, q: &BasePoint<3>, u: &[f64; 3]) -> CotangentPoint<3> {
        let r = self.radius();
        momentum_inverse(q, &EulerState::new(-1.0 + r * u[0], r * u[1], r * u[2]))
    }

    /// A uniform direction on the momentum sphere over a uniform base point of
    /// the fundamental domain.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> CotangentPoint<3> {
        let q = self.manifold.random_point(rng);
        let u = loop {
            let v: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if n > 1e-3 && n <= 1.0 {
                break v.map(|c| c / n);
            }
        };
        self.point(&q, &u)
    }
}

/// `|center| < radius` for the momentum sphere of level `k`.
pub fn encloses_origin(k: f64) -> bool {
    (2.0 * k).sqrt() > 1.0
}

/// Left-invariant momenta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerState {
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
}

impl EulerState {
    pub fn new(mx: f64, my: f64, mz: f64) -> Self {
        Self { mx, my, mz }
    }

    /// `½[(M_x + 1)² + M_y² + M_z²]`.
    pub fn energy(&self) -> f64 {
        0.5 * ((self.mx + 1.0).powi(2) + self.my * self.my + self.mz * self.mz)
    }

    /// The first integral `M_x M_y`.
    pub fn casimir_product(&self) -> f64 {
        self.mx * self.my
    }
}

pub fn momentum_map(x: &CotangentPoint<3>) -> EulerState {
    let e = x.q[2].exp();
    EulerState::new(e * x.p[0], x.p[1] / e, x.p[2])
}

pub fn momentum_inverse(q: &BasePoint<3>, m: &EulerState) -> CotangentPoint<3> {
    let e = q[2].exp();
    CotangentPoint::new(*q, [m.mx / e, m.my * e, m.mz])
}

/// `½|p + θ|²` with `θ = e⁻ᶻdx` in the Sol metric.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolHamiltonian;

impl Hamiltonian<3> for SolHamiltonian {
    fn value(&self, x: &CotangentPoint<3>) -> f64 {
        momentum_map(x).energy()
    }

    fn gradient(&self, x: &CotangentPoint<3>) -> PhaseVector<3> {
        let e = x.q[2].exp();
        let m = momentum_map(x);
        PhaseVector {
            dq: [0.0, 0.0, (m.mx + 1.0) * m.mx - m.my * m.my],
            dp: [(m.mx + 1.0) * e, m.my / e, m.mz],
        }
    }
}

/// The reduced (Euler) field `(M_x M_z, −M_y M_z, M_y² − M_x(M_x + 1))`.
pub fn euler_field(m: &EulerState) -> [f64; 3] {
    [m.mx * m.mz, -m.my * m.mz, m.my * m.my - m.mx * (m.mx + 1.0)]
}

/// The singular point `p₊ = (0, 0, √(2k − 1))`, present for `k > ½`.
pub fn p_plus(k: f64) -> Option<EulerState> {
    (k > 0.5).then(|| EulerState::new(0.0, 0.0, (2.0 * k - 1.0).sqrt()))
}

/// `p₋ = (0, 0, −√(2k − 1))`.
pub fn p_minus(k: f64) -> Option<EulerState> {
    p_plus(k).map(|m| EulerState::new(0.0, 0.0, -m.mz))
}

/// `√(2k − 1)` for `k > ½`, else 0.
pub fn entropy_closed_form(k: f64) -> f64 {
    if k > 0.5 {
        (2.0 * k - 1.0).sqrt()
    } else {
        0.0
    }
}

/// Default discarded fraction before averaging.
pub const DEFAULT_BURN_IN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    /// `|time-average of M_z|` over the retained window.
    pub value: f64,
    /// `(t, running average)` at up to ten checkpoints of the window.
    pub partial_averages: Vec<(f64, f64)>,
}

/// `χ₊ ≈ |(1/T) ∫ M_z dt|` over the trajectory after discarding the first
/// `burn_in_fraction` of it. Trapezoid rule on the stored samples.
pub fn lyapunov_plus(traj: &Trajectory<3>, burn_in_fraction: f64) -> Result<LyapunovEstimate> {
    if !(0.0..1.0).contains(&burn_in_fraction) {
        return Err(LabError::InvalidInput(format!(
            "burn-in fraction must lie in [0, 1), got {burn_in_fraction}"
        )));
    }
    let n = traj.times.len();
    let t0 = traj.times[0];
    let t_start = t0 + burn_in_fraction * traj.duration();
    let first = traj.times.partition_point(|t| *t < t_start);
    if n < 3 || n - first < 3 || !(traj.duration() > 0.0) {
        return Err(LabError::InvalidInput("trajectory too short for averaging".into()));
    }
    let window = &traj.times[first..];
    let mz: Vec<f64> = traj.states[first..].iter().map(|x| x.p[2]).collect();
    let span = window[window.len() - 1] - window[0];
    let checkpoints: Vec<usize> = (1..=10).map(|j| (j * (window.len() - 1)) / 10).collect();
    let mut integral = 0.0;
    let mut partial_averages = Vec::new();
    for i in 1..window.len() {
        integral += 0.5 * (mz[i] + mz[i - 1]) * (window[i] - window[i - 1]);
        if checkpoints.contains(&i) && partial_averages.last().is_none_or(|(t, _)| *t < window[i]) {
            partial_averages.push((window[i], (integral / (window[i] - window[0])).abs()));
        }
    }
    Ok(LyapunovEstimate {
        value: (integral / span).abs(),
        partial_averages,
    })
}
