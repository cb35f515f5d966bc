//! The action functional `A_H(γ) = ∫ (p·q̇ − H) dt` and checks built on it.

use serde::{Deserialize, Serialize};

use super::integrator::{flow, IntegratorConfig, Trajectory};
use super::{hamiltonian_vector_field, Hamiltonian, Scaled};
use crate::error::{LabError, Result};
use crate::geometry::CoverGeometry;
use crate::phase::{CotangentPoint, PhaseVector};
use crate::starshape::{SandwichComponent, SandwichedHamiltonians};

/// Half-width of the band around `F = 1` in which chords are not classified.
pub const BOUNDARY_BAND: f64 = 1e-6;

fn uniform_step(times: &[f64]) -> Result<f64> {
    let intervals = times.len().saturating_sub(1);
    if intervals < 2 || intervals % 2 == 1 {
        return Err(LabError::InvalidInput(format!(
            "Simpson quadrature needs an even number (≥ 2) of intervals, got {intervals}"
        )));
    }
    let h = (times[intervals] - times[0]) / intervals as f64;
    let uniform = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1.0));
    if !uniform {
        return Err(LabError::InvalidInput("Simpson quadrature needs a uniform grid".into()));
    }
    Ok(h)
}

fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    let mut sum = values[0] + values[n];
    for (i, v) in values.iter().enumerate().take(n).skip(1) {
        sum += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    sum * h / 3.0
}

/// Composite Simpson rule on a uniform grid with an even number of intervals.
pub fn simpson_uniform(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() {
        return Err(LabError::InvalidInput("sample count mismatch".into()));
    }
    let h = uniform_step(times)?;
    Ok(simpson(values, h))
}

fn lagrangian_samples<const D: usize, H: Hamiltonian<D> + ?Sized>(
    traj: &Trajectory<D>,
    h: &H,
) -> Vec<f64> {
    traj.states
        .iter()
        .map(|x| {
            let qdot = hamiltonian_vector_field(h, x).dq;
            let pq: f64 = x.p.iter().zip(qdot.iter()).map(|(p, v)| p * v).sum();
            pq - h.value(x)
        })
        .collect()
}

/// `∫ (p·q̇ − H) dt` over the stored samples, with `q̇ = ∂H/∂p`.
pub fn action_of_trajectory<const D: usize, H: Hamiltonian<D> + ?Sized>(
    traj: &Trajectory<D>,
    h: &H,
) -> Result<f64> {
    action_with_halving(traj, h).map(|(a, _)| a)
}

/// The action and the difference to the same rule on every other sample
/// (zero when the grid cannot be halved).
pub fn action_with_halving<const D: usize, H: Hamiltonian<D> + ?Sized>(
    traj: &Trajectory<D>,
    h: &H,
) -> Result<(f64, f64)> {
    let step = uniform_step(&traj.times)?;
    let values = lagrangian_samples(traj, h);
    let fine = simpson(&values, step);
    let intervals = values.len() - 1;
    if intervals % 4 != 0 {
        return Ok((fine, 0.0));
    }
    let coarse: Vec<f64> = values.iter().step_by(2).copied().collect();
    Ok((fine, (fine - simpson(&coarse, 2.0 * step)).abs()))
}

/// `2 h′(H) H − h(H)`: the action density of an orbit of `h ∘ H` when `H` is
/// fiberwise homogeneous of degree two.
pub fn action_homogeneous(h_prime: f64, h_val: f64, big_h: f64) -> f64 {
    2.0 * h_prime * big_h - h_val
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    /// Endpoint mismatch of the rescaled path against the flow of `cH`.
    pub residual: f64,
    pub relative_error: f64,
}

/// Rescales covectors by `1/c`, checks the result is an orbit of `cH`, and
/// compares `A_{cH}(γ_c)` with `A_H(γ)/c`.
pub fn verify_scaling_law<const D: usize, H: Hamiltonian<D>>(
    h: &H,
    chord: &Trajectory<D>,
    c: f64,
    cfg: &IntegratorConfig,
) -> Result<ScalingReport> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(LabError::InvalidInput(format!("scaling factor must be positive, got {c}")));
    }
    let scaled_h = Scaled::new(h, c);
    let scaled = Trajectory::from_samples(
        chord.times.clone(),
        chord.states.iter().map(|x| x.scale_fiber(1.0 / c)).collect(),
    )?;
    let end = flow(&scaled_h, scaled.start(), chord.duration(), cfg)?;
    let size = scaled.end().p.iter().chain(scaled.end().q.iter()).fold(1.0_f64, |m, v| m.max(v.abs()));
    let residual = end.max_abs_diff(scaled.end()) / size;
    if residual > 1e-6 {
        return Err(LabError::ChordResidual(residual));
    }
    let a = action_of_trajectory(chord, h)?;
    let a_c = action_of_trajectory(&scaled, &scaled_h)?;
    let relative_error = if a == 0.0 { a_c.abs() } else { (a_c - a / c).abs() / a.abs() };
    Ok(ScalingReport { residual, relative_error })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionClass {
    Inside,
    Outside,
    BoundaryAmbiguous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChordClassification {
    pub class: ActionClass,
    pub action: f64,
    pub f_min: f64,
    pub f_max: f64,
}

/// Classifies a chord of `nK` (over unit time) by where it runs relative to
/// `Σ` and checks the matching action inequality against `n`.
pub fn classify_chord_action<G: CoverGeometry<D>, const D: usize>(
    chord: &Trajectory<D>,
    sandwich: &SandwichedHamiltonians<G, D>,
    n: u32,
) -> Result<ChordClassification> {
    let nk = sandwich.hamiltonian(SandwichComponent::K, n as f64);
    let action = action_of_trajectory(chord, &nk)?;
    let (f_min, f_max) = chord
        .states
        .iter()
        .map(|x| sandwich.surface.f_value(x))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| (lo.min(f), hi.max(f)));
    let n = n as f64;
    let class = if f_max < 1.0 - BOUNDARY_BAND {
        ActionClass::Inside
    } else if f_min > 1.0 + BOUNDARY_BAND {
        ActionClass::Outside
    } else {
        ActionClass::BoundaryAmbiguous
    };
    let violated = match class {
        ActionClass::Inside => action >= n,
        ActionClass::Outside => action <= n,
        ActionClass::BoundaryAmbiguous => false,
    };
    if violated {
        return Err(LabError::InvariantFailure(format!(
            "chord with F in [{f_min:.6}, {f_max:.6}] has action {action:.9} against n = {n}"
        )));
    }
    Ok(ChordClassification { class, action, f_min, f_max })
}

/// `‖X_{f∘F}(q, sp) − σ(s) dψ_s X_{f∘F}(q, p)‖` with `σ(s) = f′(s²)s` and
/// `dψ_s(δq, δp) = (δq, s δp)`, for `x = (q, p)` on `Σ`.
pub fn time_change_residual<G: CoverGeometry<D>, const D: usize>(
    sandwich: &SandwichedHamiltonians<G, D>,
    x_on_sigma: &CotangentPoint<D>,
    s: f64,
) -> f64 {
    let h = sandwich.hamiltonian(SandwichComponent::CutoffF, 1.0);
    let lhs = hamiltonian_vector_field(&h, &x_on_sigma.scale_fiber(s));
    let sigma = sandwich.cutoff.eval(s * s).1 * s;
    let base = hamiltonian_vector_field(&h, x_on_sigma);
    let mut rhs = PhaseVector::zero();
    for i in 0..D {
        rhs.dq[i] = sigma * base.dq[i];
        rhs.dp[i] = sigma * s * base.dp[i];
    }
    (lhs - rhs).norm()
}
