//! Hamiltonian vector fields, trajectory integration, the action functional
//! and chord shooting.
//!
//! Sign convention: `ω = Σ dp_i ∧ dq_i` and `ω(X_H, ·) = −dH`, so that
//! `q̇ = ∂H/∂p`, `ṗ = −∂H/∂q` and `H = ½|p|²` generates the geodesic flow.

mod action;
mod chords;
mod integrator;
pub(crate) mod linalg;
mod noncrossing;

pub use action::{
    action_homogeneous, action_of_trajectory, action_with_halving, classify_chord_action,
    simpson_uniform, time_change_residual, verify_scaling_law, ActionClass, ChordClassification,
    ScalingReport, BOUNDARY_BAND,
};
pub use chords::{find_fiber_chords, shoot_chord, Chord, ChordSearch, NewtonConfig};
pub use integrator::{flow, integrate, propagate, IntegratorConfig, Scheme, StepStats, Trajectory};
pub use noncrossing::{noncrossing_check, NonCrossingConfig, NonCrossingLevel, NonCrossingReport};

use crate::phase::{CotangentPoint, PhaseVector};

/// A smooth function on `T*M` with its differential.
pub trait Hamiltonian<const D: usize>: Send + Sync {
    fn value(&self, x: &CotangentPoint<D>) -> f64;

    /// `(∂H/∂q, ∂H/∂p)`.
    fn gradient(&self, x: &CotangentPoint<D>) -> PhaseVector<D>;
}

impl<const D: usize, H: Hamiltonian<D> + ?Sized> Hamiltonian<D> for &H {
    fn value(&self, x: &CotangentPoint<D>) -> f64 {
        (**self).value(x)
    }

    fn gradient(&self, x: &CotangentPoint<D>) -> PhaseVector<D> {
        (**self).gradient(x)
    }
}

/// `c · H`.
#[derive(Debug, Clone, Copy)]
pub struct Scaled<H> {
    pub inner: H,
    pub factor: f64,
}

impl<H> Scaled<H> {
    pub fn new(inner: H, factor: f64) -> Self {
        Self { inner, factor }
    }
}

impl<const D: usize, H: Hamiltonian<D>> Hamiltonian<D> for Scaled<H> {
    fn value(&self, x: &CotangentPoint<D>) -> f64 {
        self.factor * self.inner.value(x)
    }

    fn gradient(&self, x: &CotangentPoint<D>) -> PhaseVector<D> {
        self.inner.gradient(x) * self.factor
    }
}

/// The identically zero Hamiltonian.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl<const D: usize> Hamiltonian<D> for Zero {
    fn value(&self, _x: &CotangentPoint<D>) -> f64 {
        0.0
    }

    fn gradient(&self, _x: &CotangentPoint<D>) -> PhaseVector<D> {
        PhaseVector::zero()
    }
}

/// `X_H(x) = (∂H/∂p, −∂H/∂q)`.
pub fn hamiltonian_vector_field<const D: usize, H: Hamiltonian<D> + ?Sized>(
    h: &H,
    x: &CotangentPoint<D>,
) -> PhaseVector<D> {
    let g = h.gradient(x);
    let mut v = PhaseVector::zero();
    for i in 0..D {
        v.dq[i] = g.dp[i];
        v.dp[i] = -g.dq[i];
    }
    v
}

/// Default step for central finite differences.
pub const FD_STEP: f64 = 1e-6;

/// Central finite-difference gradient, used to cross-check analytic ones.
pub fn finite_difference_gradient<const D: usize, H: Hamiltonian<D> + ?Sized>(
    h: &H,
    x: &CotangentPoint<D>,
    step: f64,
) -> PhaseVector<D> {
    let mut g = PhaseVector::zero();
    for i in 0..D {
        let (mut a, mut b) = (*x, *x);
        a.q[i] += step;
        b.q[i] -= step;
        g.dq[i] = (h.value(&a) - h.value(&b)) / (2.0 * step);
        let (mut a, mut b) = (*x, *x);
        a.p[i] += step;
        b.p[i] -= step;
        g.dp[i] = (h.value(&a) - h.value(&b)) / (2.0 * step);
    }
    g
}

/// Largest error of the analytic gradient against finite differences over
/// `points`, relative to `max(1, |∇H|)`.
pub fn gradient_check<const D: usize, H: Hamiltonian<D> + ?Sized>(
    h: &H,
    points: &[CotangentPoint<D>],
) -> f64 {
    points
        .iter()
        .map(|x| {
            let a = h.gradient(x);
            let f = finite_difference_gradient(h, x, FD_STEP);
            (a - f).max_abs() / a.max_abs().max(1.0)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Torus2;
    use crate::starshape::{
        CalibrationSampling, RadialProfile, SandwichComponent, SandwichedHamiltonians,
        StarshapedSurface,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Kinetic;
    impl Hamiltonian<2> for Kinetic {
        fn value(&self, x: &CotangentPoint<2>) -> f64 {
            0.5 * (x.p[0] * x.p[0] + x.p[1] * x.p[1])
        }
        fn gradient(&self, x: &CotangentPoint<2>) -> PhaseVector<2> {
            PhaseVector { dq: [0.0; 2], dp: x.p }
        }
    }

    #[test]
    fn geodesic_field_on_torus() {
        let x = CotangentPoint::new([0.3, 0.4], [1.5, -0.5]);
        let v = hamiltonian_vector_field(&Kinetic, &x);
        assert_eq!(v.dq, [1.5, -0.5]);
        assert_eq!(v.dp, [0.0, 0.0]);
    }

    #[test]
    fn sandwich_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for profile in [
            RadialProfile::Round,
            RadialProfile::Ellipse { axes: vec![1.0, 2.0] },
            RadialProfile::Fourier { mean: 1.0, cos: vec![0.15], sin: vec![0.0, 0.05] },
        ] {
            let surface = StarshapedSurface::new(Torus2::standard(), profile).unwrap();
            let s = SandwichedHamiltonians::new(surface, 0.2, 1.1, CalibrationSampling::default())
                .unwrap();
            let pts: Vec<_> = (0..1000)
                .map(|_| {
                    let r = rng.gen_range(0.0..6.0);
                    let t = rng.gen_range(0.0..std::f64::consts::TAU);
                    CotangentPoint::new([rng.gen(), rng.gen()], [r * t.cos(), r * t.sin()])
                })
                .collect();
            for which in [
                SandwichComponent::G,
                SandwichComponent::GMinus,
                SandwichComponent::K,
                SandwichComponent::GPlus,
                SandwichComponent::Homotopy(0.4),
                SandwichComponent::CutoffF,
            ] {
                let err = gradient_check(&s.hamiltonian(which, 1.0), &pts);
                assert!(err <= 1e-5, "{which:?}: {err}");
            }
        }
    }

    #[test]
    fn k_field_vanishes_at_fiber_origin() {
        let surface = StarshapedSurface::new(Torus2::standard(), RadialProfile::Round).unwrap();
        let s = SandwichedHamiltonians::new(surface, 0.2, 1.1, CalibrationSampling::default()).unwrap();
        let v = hamiltonian_vector_field(
            &s.hamiltonian(SandwichComponent::K, 3.0),
            &CotangentPoint::origin([0.2, 0.9]),
        );
        assert_eq!(v, PhaseVector::zero());
    }
}
