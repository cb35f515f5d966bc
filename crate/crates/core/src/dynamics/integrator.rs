//! Flow integration.
//!
//! Both schemes report states on a uniform output grid with an even number of
//! intervals, so downstream quadrature can use composite Simpson directly.
//! The adaptive scheme clips its steps to land on every grid point.

use serde::{Deserialize, Serialize};

use super::{hamiltonian_vector_field, Hamiltonian};
use crate::error::{LabError, Result};
use crate::phase::{CotangentPoint, PhaseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Dormand–Prince 5(4) with step-size control.
    DormandPrince,
    /// Fixed-step implicit midpoint with `max_step` as the step.
    ImplicitMidpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Output spacing upper bound; also the largest internal step.
    pub max_step: f64,
    /// Largest tolerated relative energy drift before aborting.
    pub drift_abort: f64,
    /// Steps smaller than this abort with a stiffness error.
    pub min_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::DormandPrince,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.05,
            drift_abort: 1e-6,
            min_step: 1e-12,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.rel_tol, self.abs_tol, self.max_step, self.drift_abort, self.min_step];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(LabError::InvalidInput(
                "integrator tolerances and steps must be positive and finite".into(),
            ));
        }
        if self.min_step >= self.max_step {
            return Err(LabError::InvalidInput("min_step must be below max_step".into()));
        }
        Ok(())
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = rel_tol * 1e-2;
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub steps: u64,
    pub rejections: u64,
    /// Largest `|H(x_t) − H(x_0)| / max(|H(x_0)|, 1)` at output points.
    pub energy_drift: f64,
}

/// Samples of an orbit on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const D: usize> {
    pub times: Vec<f64>,
    pub states: Vec<CotangentPoint<D>>,
    pub energy_drift: f64,
    pub steps: u64,
    pub rejections: u64,
}

impl<const D: usize> Trajectory<D> {
    pub fn start(&self) -> &CotangentPoint<D> {
        &self.states[0]
    }

    pub fn end(&self) -> &CotangentPoint<D> {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn duration(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0) - self.times.first().copied().unwrap_or(0.0)
    }

    /// Builds a trajectory from arbitrary samples (used for synthetic input).
    pub fn from_samples(times: Vec<f64>, states: Vec<CotangentPoint<D>>) -> Result<Self> {
        if times.len() != states.len() || times.is_empty() {
            return Err(LabError::InvalidInput("times and states must match and be non-empty".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(LabError::InvalidInput("times must be strictly increasing".into()));
        }
        Ok(Self {
            times,
            states,
            energy_drift: 0.0,
            steps: 0,
            rejections: 0,
        })
    }
}

/// Uniform output grid `[0, t_end]` with an even number of intervals.
fn output_grid(t_end: f64, max_step: f64) -> (usize, f64) {
    let mut n = (t_end / max_step).ceil().max(2.0) as usize;
    if n % 2 == 1 {
        n += 1;
    }
    (n, t_end / n as f64)
}

/// Integrates over `[0, t_end]`, calling `observer(k, t, x)` at each of the
/// output grid points (including `t = 0`).
pub fn propagate<const D: usize, H, O>(
    h: &H,
    x0: &CotangentPoint<D>,
    t_end: f64,
    cfg: &IntegratorConfig,
    mut observer: O,
) -> Result<StepStats>
where
    H: Hamiltonian<D> + ?Sized,
    O: FnMut(usize, f64, &CotangentPoint<D>),
{
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(LabError::InvalidInput(format!("integration time must be positive, got {t_end}")));
    }
    if !x0.is_finite() {
        return Err(LabError::InvalidInput("initial state is not finite".into()));
    }
    cfg.validate()?;
    let (n_out, dt_out) = output_grid(t_end, cfg.max_step);
    let e0 = h.value(x0);
    let scale = e0.abs().max(1.0);
    let mut stats = StepStats::default();
    let mut x = *x0;
    observer(0, 0.0, &x);
    let mut stepper = Stepper::new(cfg, dt_out);
    for k in 1..=n_out {
        let t_next = if k == n_out { t_end } else { k as f64 * dt_out };
        let t_prev = (k - 1) as f64 * dt_out;
        x = stepper.advance(h, x, t_prev, t_next, &mut stats)?;
        let drift = (h.value(&x) - e0).abs() / scale;
        if !drift.is_finite() || !x.is_finite() {
            return Err(LabError::IntegrationDiverged(format!("non-finite state at t = {t_next}")));
        }
        stats.energy_drift = stats.energy_drift.max(drift);
        if drift > cfg.drift_abort {
            return Err(LabError::IntegrationDiverged(format!(
                "relative energy drift {drift:.3e} exceeds {:.1e} at t = {t_next}",
                cfg.drift_abort
            )));
        }
        observer(k, t_next, &x);
    }
    Ok(stats)
}

/// Integrates and stores every output sample.
pub fn integrate<const D: usize, H: Hamiltonian<D> + ?Sized>(
    h: &H,
    x0: &CotangentPoint<D>,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<D>> {
    let (n_out, _) = output_grid(t_end.max(0.0), cfg.max_step.max(f64::MIN_POSITIVE));
    let mut times = Vec::with_capacity(n_out + 1);
    let mut states = Vec::with_capacity(n_out + 1);
    let stats = propagate(h, x0, t_end, cfg, |_, t, x| {
        times.push(t);
        states.push(*x);
    })?;
    Ok(Trajectory {
        times,
        states,
        energy_drift: stats.energy_drift,
        steps: stats.steps,
        rejections: stats.rejections,
    })
}

/// The time-`t_end` map `φ_H^{t_end}(x0)`.
pub fn flow<const D: usize, H: Hamiltonian<D> + ?Sized>(
    h: &H,
    x0: &CotangentPoint<D>,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<CotangentPoint<D>> {
    let mut end = *x0;
    propagate(h, x0, t_end, cfg, |_, _, x| end = *x)?;
    Ok(end)
}

struct Stepper<'c> {
    cfg: &'c IntegratorConfig,
    h_try: f64,
}

// Dormand–Prince 5(4) tableau.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn combine<const D: usize>(x: &CotangentPoint<D>, h: f64, coeffs: &[f64], ks: &[PhaseVector<D>]) -> CotangentPoint<D> {
    let mut out = *x;
    for (c, k) in coeffs.iter().zip(ks) {
        if *c != 0.0 {
            out = out.shifted(k, h * c);
        }
    }
    out
}

impl<'c> Stepper<'c> {
    fn new(cfg: &'c IntegratorConfig, dt_out: f64) -> Self {
        Self { cfg, h_try: dt_out.min(cfg.max_step) }
    }

    fn advance<const D: usize, H: Hamiltonian<D> + ?Sized>(
        &mut self,
        h: &H,
        x: CotangentPoint<D>,
        t0: f64,
        t1: f64,
        stats: &mut StepStats,
    ) -> Result<CotangentPoint<D>> {
        match self.cfg.scheme {
            Scheme::DormandPrince => self.advance_dp(h, x, t0, t1, stats),
            Scheme::ImplicitMidpoint => {
                let x = implicit_midpoint_step(h, &x, t1 - t0, t0)?;
                stats.steps += 1;
                Ok(x)
            }
        }
    }

    fn advance_dp<const D: usize, H: Hamiltonian<D> + ?Sized>(
        &mut self,
        h: &H,
        mut x: CotangentPoint<D>,
        t0: f64,
        t1: f64,
        stats: &mut StepStats,
    ) -> Result<CotangentPoint<D>> {
        let cfg = self.cfg;
        let mut t = t0;
        let mut k1 = hamiltonian_vector_field(h, &x);
        loop {
            let remaining = t1 - t;
            if remaining <= 1e-14 * t1.abs().max(1.0) {
                return Ok(x);
            }
            let mut step = self.h_try.min(cfg.max_step);
            let last = step >= remaining;
            if last {
                step = remaining;
            }
            let mut ks = [k1; 7];
            for (s, a) in [&A2[..], &A3[..], &A4[..], &A5[..], &A6[..]].iter().enumerate() {
                let y = combine(&x, step, a, &ks[..s + 1]);
                ks[s + 1] = hamiltonian_vector_field(h, &y);
            }
            let x_new = combine(&x, step, &B, &ks[..6]);
            ks[6] = hamiltonian_vector_field(h, &x_new);
            let mut err_sq = 0.0;
            for i in 0..D {
                let mut eq = 0.0;
                let mut ep = 0.0;
                for s in 0..7 {
                    eq += E[s] * ks[s].dq[i];
                    ep += E[s] * ks[s].dp[i];
                }
                let sq = cfg.abs_tol + cfg.rel_tol * x.q[i].abs().max(x_new.q[i].abs());
                let sp = cfg.abs_tol + cfg.rel_tol * x.p[i].abs().max(x_new.p[i].abs());
                err_sq += (step * eq / sq).powi(2) + (step * ep / sp).powi(2);
            }
            let err = (err_sq / (2 * D) as f64).sqrt();
            if !err.is_finite() {
                return Err(LabError::IntegrationDiverged(format!("non-finite error estimate at t = {t}")));
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                stats.steps += 1;
                t = if last { t1 } else { t + step };
                x = x_new;
                k1 = ks[6];
                if !last || factor < 1.0 {
                    self.h_try = step * factor;
                }
            } else {
                stats.rejections += 1;
                self.h_try = step * factor;
                if self.h_try < cfg.min_step {
                    return Err(LabError::Stiffness {
                        t,
                        detail: format!("step {:.3e} below min_step {:.1e}", self.h_try, cfg.min_step),
                    });
                }
            }
        }
    }
}

/// One implicit-midpoint step `x₁ = x₀ + h X((x₀ + x₁)/2)` by fixed-point
/// iteration.
fn implicit_midpoint_step<const D: usize, H: Hamiltonian<D> + ?Sized>(
    h: &H,
    x0: &CotangentPoint<D>,
    step: f64,
    t: f64,
) -> Result<CotangentPoint<D>> {
    let mut x1 = x0.shifted(&hamiltonian_vector_field(h, x0), step);
    for _ in 0..100 {
        let mut mid = *x0;
        for i in 0..D {
            mid.q[i] = 0.5 * (x0.q[i] + x1.q[i]);
            mid.p[i] = 0.5 * (x0.p[i] + x1.p[i]);
        }
        let next = x0.shifted(&hamiltonian_vector_field(h, &mid), step);
        let change = next.max_abs_diff(&x1);
        let scale = next
            .q
            .iter()
            .chain(next.p.iter())
            .fold(1.0_f64, |m, v| m.max(v.abs()));
        x1 = next;
        if change <= 1e-15 * scale {
            return Ok(x1);
        }
    }
    Err(LabError::Stiffness {
        t,
        detail: "implicit midpoint iteration did not converge".into(),
    })
}
