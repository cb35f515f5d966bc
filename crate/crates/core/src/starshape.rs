//! Fiberwise starshaped hypersurfaces and the sandwiched Hamiltonians.
//!
//! A hypersurface `Σ` is described by a [`RadialProfile`] in the orthonormal
//! coframe of the base metric: `Σ_q = { p : |p̂| = r(p̂/|p̂|) }`. The degree-two
//! homogeneous function with `F|_Σ ≡ 1` is `F(q,p) = (|p|_g / r(u))²`. From it
//! we build the cutoff `f∘F`, the geodesic Hamiltonian `G = ½|p|²_{cg}` and
//! the triple `G₋ ≤ K ≤ G₊` together with the homotopy `G_s`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::Hamiltonian;
use crate::error::{LabError, Result};
use crate::geometry::{BasePoint, CoverGeometry};
use crate::phase::{CotangentPoint, PhaseVector};
use crate::smooth::{beta, smoothstep, tau};

/// Shape of the fiber slices `Σ_q`, constant in the orthonormal coframe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RadialProfile {
    /// `r ≡ 1`: the unit cosphere bundle.
    Round,
    /// Axis lengths per orthonormal direction: `F = Σ p̂_i² / a_i²`.
    Ellipse { axes: Vec<f64> },
    /// `r(θ) = a₀ + Σ_k (a_k cos kθ + b_k sin kθ)` in the fiber angle; two
    /// dimensional fibers only.
    Fourier { mean: f64, cos: Vec<f64>, sin: Vec<f64> },
}

impl RadialProfile {
    /// Checks dimension compatibility and `r ≥ r_min > 0` by sampling.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            RadialProfile::Round => Ok(()),
            RadialProfile::Ellipse { axes } => {
                if axes.len() != dim {
                    return Err(LabError::InvalidInput(format!(
                        "ellipse profile needs {dim} axes, got {}",
                        axes.len()
                    )));
                }
                if axes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                    return Err(LabError::Calibration("ellipse axes must be positive".into()));
                }
                Ok(())
            }
            RadialProfile::Fourier { mean, cos, sin } => {
                if dim != 2 {
                    return Err(LabError::InvalidInput(
                        "Fourier profiles are limited to two-dimensional fibers".into(),
                    ));
                }
                if !mean.is_finite() || cos.iter().chain(sin).any(|c| !c.is_finite()) {
                    return Err(LabError::InvalidInput("non-finite Fourier coefficient".into()));
                }
                let r_min = (0..4096)
                    .map(|i| self.fourier_radius(2.0 * PI * i as f64 / 4096.0).0)
                    .fold(f64::INFINITY, f64::min);
                if !(r_min > 0.0) {
                    return Err(LabError::Calibration(format!(
                        "Fourier profile is not positive (sampled minimum {r_min:.3e})"
                    )));
                }
                Ok(())
            }
        }
    }

    fn fourier_radius(&self, theta: f64) -> (f64, f64) {
        match self {
            RadialProfile::Fourier { mean, cos, sin } => {
                let mut r = *mean;
                let mut dr = 0.0;
                for (k, (a, b)) in cos.iter().zip(sin.iter().chain(std::iter::repeat(&0.0))).enumerate() {
                    let kf = (k + 1) as f64;
                    let (s, c) = (kf * theta).sin_cos();
                    r += a * c + b * s;
                    dr += kf * (b * c - a * s);
                }
                for (k, b) in sin.iter().enumerate().skip(cos.len()) {
                    let kf = (k + 1) as f64;
                    let (s, c) = (kf * theta).sin_cos();
                    r += b * s;
                    dr += kf * b * c;
                }
                (r, dr)
            }
            _ => unreachable!("fourier_radius on a non-Fourier profile"),
        }
    }

    /// `r(u)` for a unit orthonormal direction `u`.
    pub fn radius<const D: usize>(&self, u: &[f64; D]) -> f64 {
        match self {
            RadialProfile::Round => 1.0,
            RadialProfile::Ellipse { axes } => {
                let s: f64 = (0..D).map(|i| (u[i] / axes[i]).powi(2)).sum();
                1.0 / s.sqrt()
            }
            RadialProfile::Fourier { .. } => self.fourier_radius(u[1].atan2(u[0])).0,
        }
    }

    /// `Φ(p̂) = (|p̂| / r(p̂/|p̂|))²` and its gradient in `p̂`.
    pub fn phi<const D: usize>(&self, ph: &[f64; D]) -> (f64, [f64; D]) {
        match self {
            RadialProfile::Round => {
                let mut g = [0.0; D];
                let mut v = 0.0;
                for i in 0..D {
                    v += ph[i] * ph[i];
                    g[i] = 2.0 * ph[i];
                }
                (v, g)
            }
            RadialProfile::Ellipse { axes } => {
                let mut g = [0.0; D];
                let mut v = 0.0;
                for i in 0..D {
                    let a2 = axes[i] * axes[i];
                    v += ph[i] * ph[i] / a2;
                    g[i] = 2.0 * ph[i] / a2;
                }
                (v, g)
            }
            RadialProfile::Fourier { .. } => {
                let rho2 = ph[0] * ph[0] + ph[1] * ph[1];
                let mut g = [0.0; D];
                if rho2 == 0.0 {
                    return (0.0, g);
                }
                let theta = ph[1].atan2(ph[0]);
                let (r, dr) = self.fourier_radius(theta);
                let v = rho2 / (r * r);
                // ∂Φ/∂ρ · ρ̂ + (1/ρ) ∂Φ/∂θ · θ̂ with ∂Φ/∂θ = −2ρ² r′/r³.
                let radial = 2.0 / (r * r);
                let angular = -2.0 * dr / (r * r * r);
                g[0] = radial * ph[0] - angular * ph[1];
                g[1] = radial * ph[1] + angular * ph[0];
                (v, g)
            }
        }
    }
}

/// `Σ` over a model manifold, carrying the homogeneous function `F`.
#[derive(Debug, Clone)]
pub struct StarshapedSurface<G, const D: usize> {
    pub geometry: G,
    pub profile: RadialProfile,
}

impl<G: CoverGeometry<D>, const D: usize> StarshapedSurface<G, D> {
    pub fn new(geometry: G, profile: RadialProfile) -> Result<Self> {
        profile.validate(D)?;
        Ok(Self { geometry, profile })
    }

    /// `F(q,p)`; zero on the zero section.
    pub fn f_value(&self, x: &CotangentPoint<D>) -> f64 {
        self.f_with_gradient(x).0
    }

    /// `F` and `(∂F/∂q, ∂F/∂p)`.
    pub fn f_with_gradient(&self, x: &CotangentPoint<D>) -> (f64, PhaseVector<D>) {
        let s = self.geometry.coframe(&x.q);
        let mut ph = [0.0; D];
        for i in 0..D {
            ph[i] = s[i] * x.p[i];
        }
        let (v, gh) = self.profile.phi(&ph);
        let ds = self.geometry.coframe_gradient(&x.q);
        let mut grad = PhaseVector::zero();
        for i in 0..D {
            grad.dp[i] = s[i] * gh[i];
            for j in 0..D {
                grad.dq[j] += gh[i] * x.p[i] * ds[i][j];
            }
        }
        (v, grad)
    }

    /// The point of `Σ_q` in orthonormal direction `u` (unit).
    pub fn point_on_sigma(&self, q: &BasePoint<D>, u: &[f64; D]) -> CotangentPoint<D> {
        let r = self.profile.radius(u);
        let s = self.geometry.coframe(q);
        let mut p = [0.0; D];
        for i in 0..D {
            p[i] = r * u[i] / s[i];
        }
        CotangentPoint::new(*q, p)
    }

    /// Unscaled `½|p|²_g` and its gradient.
    fn half_norm_sq(&self, x: &CotangentPoint<D>) -> (f64, PhaseVector<D>) {
        let s = self.geometry.coframe(&x.q);
        let ds = self.geometry.coframe_gradient(&x.q);
        let mut v = 0.0;
        let mut grad = PhaseVector::zero();
        for i in 0..D {
            let ph = s[i] * x.p[i];
            v += 0.5 * ph * ph;
            grad.dp[i] = s[i] * ph;
            for j in 0..D {
                grad.dq[j] += ph * x.p[i] * ds[i][j];
            }
        }
        (v, grad)
    }
}

/// The cutoff `f`: `f = 0` on `r ≤ ε²`, `f(r) = r` on `r ≥ ε`, with the quintic
/// blend `f(r) = r·S((r − ε²)/(ε − ε²))` in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffF {
    eps: f64,
}

/// Number of points on the derivative verification grid.
pub const CUTOFF_GRID: usize = 10_000;

impl CutoffF {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.25) {
            return Err(LabError::InvalidInput(format!("ε must lie in (0, 1/4), got {eps}")));
        }
        Ok(Self { eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `(f(r), f′(r))`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let e2 = self.eps * self.eps;
        if r <= e2 {
            (0.0, 0.0)
        } else if r >= self.eps {
            (r, 1.0)
        } else {
            let width = self.eps - e2;
            let (s, ds) = smoothstep((r - e2) / width);
            (r * s, s + r * ds / width)
        }
    }

    /// Extremes of `f′` on a uniform grid over `[0, 2ε]` and the smallest
    /// `f′` on the part of the grid with `r > ε²`.
    pub fn derivative_bounds(&self, points: usize) -> (f64, f64, f64) {
        let e2 = self.eps * self.eps;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut lo_active = f64::INFINITY;
        for i in 0..points {
            let r = 2.0 * self.eps * i as f64 / (points - 1) as f64;
            let (_, d) = self.eval(r);
            lo = lo.min(d);
            hi = hi.max(d);
            if r > e2 {
                lo_active = lo_active.min(d);
            }
        }
        (lo, hi, lo_active)
    }

    /// `0 ≤ f′ ≤ 2` everywhere and `f′ > 0` on `(ε², ∞)`, on the grid.
    pub fn bounds_hold(&self) -> bool {
        let (lo, hi, lo_active) = self.derivative_bounds(CUTOFF_GRID);
        lo >= 0.0 && hi <= 2.0 && lo_active > 0.0
    }

    /// Halves `ε` until the derivative bounds hold and `ε² < 1/(2σ)`.
    /// Returns the accepted cutoff and the number of halvings.
    pub fn shrink_to_fit(eps: f64, sigma: f64) -> Result<(Self, u32)> {
        let mut cutoff = Self::new(eps)?;
        let mut halvings = 0;
        while !(cutoff.bounds_hold() && cutoff.eps * cutoff.eps < 1.0 / (2.0 * sigma)) {
            halvings += 1;
            if halvings > 60 {
                return Err(LabError::Calibration(
                    "no admissible ε found for the cutoff".into(),
                ));
            }
            cutoff = Self::new(cutoff.eps / 2.0)?;
        }
        Ok((cutoff, halvings))
    }
}

/// Result of rescaling the metric and choosing `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Metric rescale: `G = ½|p|²_{cg} = ½|p|²_g / c`.
    pub c: f64,
    pub sigma: f64,
    /// `sup F/G` over the sample, before the safety factor.
    pub ratio_sup: f64,
}

/// Directions and base points used by [`calibrate`].
#[derive(Debug, Clone, Copy)]
pub struct CalibrationSampling {
    pub directions: usize,
    pub base_points: usize,
}

impl Default for CalibrationSampling {
    fn default() -> Self {
        Self {
            directions: 4096,
            base_points: 64,
        }
    }
}

/// Unit directions in `ℝ^D`: equally spaced angles for `D = 2`, a Fibonacci
/// lattice plus the coordinate axes otherwise.
pub fn sample_directions<const D: usize>(n: usize) -> Vec<[f64; D]> {
    let mut out = Vec::with_capacity(n + 2 * D);
    if D == 2 {
        for i in 0..n {
            let t = 2.0 * PI * i as f64 / n as f64;
            let mut u = [0.0; D];
            u[0] = t.cos();
            u[1] = t.sin();
            out.push(u);
        }
        return out;
    }
    let golden = PI * (3.0 - 5f64.sqrt());
    for i in 0..n {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
        let rho = (1.0 - z * z).sqrt();
        let t = golden * i as f64;
        let mut u = [0.0; D];
        u[0] = rho * t.cos();
        u[1] = rho * t.sin();
        u[2] = z;
        out.push(u);
    }
    for i in 0..D {
        for sign in [1.0, -1.0] {
            let mut u = [0.0; D];
            u[i] = sign;
            out.push(u);
        }
    }
    out
}

/// Rescales the metric so that `G ≤ F` and picks `σ = safety · sup F/G`.
///
/// The metric is only enlarged when needed (`c ≥ 1`).
pub fn calibrate<G: CoverGeometry<D>, const D: usize>(
    surface: &StarshapedSurface<G, D>,
    safety: f64,
    sampling: CalibrationSampling,
) -> Result<Calibration> {
    if !(safety >= 1.0 && safety.is_finite()) {
        return Err(LabError::InvalidInput(format!("safety must be ≥ 1, got {safety}")));
    }
    let dirs = sample_directions::<D>(sampling.directions);
    let base: Vec<BasePoint<D>> = (0..sampling.base_points.max(1))
        .map(|i| {
            // Deterministic low-discrepancy points in the fundamental domain.
            let mut u = [0.0; D];
            for (k, v) in u.iter_mut().enumerate() {
                let alpha = [0.754_877_666_246_692_7, 0.569_840_290_998_053_3, 0.438_142_523_264_7][k % 3];
                *v = (0.5 + alpha * i as f64).fract();
            }
            surface.geometry.fundamental_point(&u)
        })
        .collect();
    let mut r_max = 0.0_f64;
    let mut r_min = f64::INFINITY;
    for q in &base {
        for u in &dirs {
            // F at the orthonormal unit covector u is 1/r(u)², ½|u|² = ½.
            let s = surface.geometry.coframe(q);
            let mut p = [0.0; D];
            for i in 0..D {
                p[i] = u[i] / s[i];
            }
            let f = surface.f_value(&CotangentPoint::new(*q, p));
            if !(f.is_finite() && f > 0.0) {
                return Err(LabError::Calibration(format!(
                    "profile radius is not positive in direction {u:?}"
                )));
            }
            let r = 1.0 / f.sqrt();
            r_max = r_max.max(r);
            r_min = r_min.min(r);
        }
    }
    if D == 2 {
        if let RadialProfile::Fourier { .. } = surface.profile {
            let (lo, hi) = refine_fourier_extremes(&surface.profile, sampling.directions);
            r_min = r_min.min(lo);
            r_max = r_max.max(hi);
        }
    }
    let c = (0.5 * r_max * r_max).max(1.0);
    let ratio_sup = 2.0 * c / (r_min * r_min);
    let sigma = safety * ratio_sup;
    if !(c.is_finite() && sigma.is_finite()) {
        return Err(LabError::Calibration("non-finite calibration constants".into()));
    }
    Ok(Calibration { c, sigma, ratio_sup })
}

fn refine_fourier_extremes(profile: &RadialProfile, n: usize) -> (f64, f64) {
    let step = 2.0 * PI / n as f64;
    let samples: Vec<f64> = (0..n).map(|i| profile.fourier_radius(i as f64 * step).0).collect();
    let arg = |better: &dyn Fn(f64, f64) -> bool| {
        (0..n).fold(0, |b, i| if better(samples[i], samples[b]) { i } else { b })
    };
    let polish = |i0: usize, sign: f64| {
        // Golden-section search on ±r over the bracketing cell.
        let (mut a, mut b) = ((i0 as f64 - 1.0) * step, (i0 as f64 + 1.0) * step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if sign * profile.fourier_radius(c).0 > sign * profile.fourier_radius(d).0 {
                b = d;
            } else {
                a = c;
            }
        }
        profile.fourier_radius(0.5 * (a + b)).0
    };
    let lo = polish(arg(&|x, y| x < y), -1.0).min(samples.iter().cloned().fold(f64::INFINITY, f64::min));
    let hi = polish(arg(&|x, y| x > y), 1.0).max(samples.iter().cloned().fold(0.0, f64::max));
    (lo, hi)
}

/// `σ G` with `G = ½|p|²_{cg}` and the triple `G₋ ≤ K ≤ G₊`.
#[derive(Debug, Clone)]
pub struct SandwichedHamiltonians<G, const D: usize> {
    pub surface: StarshapedSurface<G, D>,
    pub calibration: Calibration,
    pub cutoff: CutoffF,
    /// Number of times `ε` was halved during construction.
    pub eps_halvings: u32,
}

/// One component of the sandwich, as a Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SandwichComponent {
    /// `G = ½|p|²_{cg}`.
    G,
    GMinus,
    K,
    GPlus,
    /// `G_s = (1 − β(s)) G₋ + β(s) G₊`.
    Homotopy(f64),
    /// `f ∘ F` without the τ-interpolation to `G₊`.
    CutoffF,
}

impl<G: CoverGeometry<D>, const D: usize> SandwichedHamiltonians<G, D> {
    /// Calibrates `c` and `σ`, then shrinks `ε` until the cutoff is admissible.
    pub fn new(
        surface: StarshapedSurface<G, D>,
        eps: f64,
        safety: f64,
        sampling: CalibrationSampling,
    ) -> Result<Self> {
        let calibration = calibrate(&surface, safety, sampling)?;
        let (cutoff, eps_halvings) = CutoffF::shrink_to_fit(eps, calibration.sigma)?;
        Ok(Self {
            surface,
            calibration,
            cutoff,
            eps_halvings,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.calibration.sigma
    }

    /// `G` and its gradient.
    pub fn g(&self, x: &CotangentPoint<D>) -> (f64, PhaseVector<D>) {
        let (v, grad) = self.surface.half_norm_sq(x);
        let c = self.calibration.c;
        (v / c, grad * (1.0 / c))
    }

    /// `|p|` in the rescaled metric, i.e. `√(2G)`.
    pub fn norm(&self, x: &CotangentPoint<D>) -> f64 {
        (2.0 * self.g(x).0).sqrt()
    }

    /// `(G₋, K, G₊)` at `x`.
    pub fn sandwich_eval(&self, x: &CotangentPoint<D>) -> (f64, f64, f64) {
        (
            self.component(SandwichComponent::GMinus, x).0,
            self.component(SandwichComponent::K, x).0,
            self.component(SandwichComponent::GPlus, x).0,
        )
    }

    /// `(G_t(x), a(t))` with `a(t) = a / (1 + β(t)(σ − 1))`.
    pub fn homotopy_eval(&self, t: f64, x: &CotangentPoint<D>, a: f64) -> (f64, f64) {
        let g_s = self.component(SandwichComponent::Homotopy(t), x).0;
        (g_s, self.action_window(t, a))
    }

    /// `a(t) = a / (1 + β(t)(σ − 1))`.
    pub fn action_window(&self, t: f64, a: f64) -> f64 {
        a / (1.0 + beta(t).0 * (self.sigma() - 1.0))
    }

    /// Value and gradient of one component.
    pub fn component(&self, which: SandwichComponent, x: &CotangentPoint<D>) -> (f64, PhaseVector<D>) {
        let sigma = self.sigma();
        let (g, dg) = self.g(x);
        match which {
            SandwichComponent::G => (g, dg),
            SandwichComponent::GPlus => (sigma * g, dg * sigma),
            SandwichComponent::CutoffF => {
                let (f, df) = self.surface.f_with_gradient(x);
                let (h, dh) = self.cutoff.eval(f);
                (h, df * dh)
            }
            SandwichComponent::K => {
                let (f, df) = self.surface.f_with_gradient(x);
                let (h, dh) = self.cutoff.eval(f);
                self.blend_to_g_plus(g, &dg, h, df * dh)
            }
            SandwichComponent::GMinus => {
                let (h, dh) = self.cutoff.eval(g);
                self.blend_to_g_plus(g, &dg, h, dg * dh)
            }
            SandwichComponent::Homotopy(t) => {
                let (b, _) = beta(t);
                let (gm, dgm) = self.component(SandwichComponent::GMinus, x);
                ((1.0 - b) * gm + b * sigma * g, dgm * (1.0 - b) + dg * (b * sigma))
            }
        }
    }

    /// `(1 − τ(|p|)) h + τ(|p|) σG` with gradient.
    fn blend_to_g_plus(
        &self,
        g: f64,
        dg: &PhaseVector<D>,
        h: f64,
        dh: PhaseVector<D>,
    ) -> (f64, PhaseVector<D>) {
        let sigma = self.sigma();
        let r = (2.0 * g).sqrt();
        let (t, dt) = tau(r);
        let value = (1.0 - t) * h + t * sigma * g;
        let mut grad = dh * (1.0 - t) + *dg * (t * sigma);
        if dt != 0.0 {
            // ∇|p| = ∇G / |p|.
            grad = grad + *dg * (dt * (sigma * g - h) / r);
        }
        (value, grad)
    }

    /// `n ·` component as a [`Hamiltonian`].
    pub fn hamiltonian(&self, which: SandwichComponent, n: f64) -> SandwichHamiltonian<'_, G, D> {
        SandwichHamiltonian {
            sandwich: self,
            which,
            scale: n,
        }
    }
}

/// A scaled sandwich component.
#[derive(Debug, Clone, Copy)]
pub struct SandwichHamiltonian<'a, G, const D: usize> {
    pub sandwich: &'a SandwichedHamiltonians<G, D>,
    pub which: SandwichComponent,
    pub scale: f64,
}

impl<G: CoverGeometry<D>, const D: usize> Hamiltonian<D> for SandwichHamiltonian<'_, G, D> {
    fn value(&self, x: &CotangentPoint<D>) -> f64 {
        self.scale * self.sandwich.component(self.which, x).0
    }

    fn gradient(&self, x: &CotangentPoint<D>) -> PhaseVector<D> {
        self.sandwich.component(self.which, x).1 * self.scale
    }
}

/// `scale · F`, homogeneous of degree two. `scale = ½` gives the Reeb-type
/// Hamiltonian whose flow on `Σ` is the unit-speed geodesic flow for the round
/// profile.
#[derive(Debug, Clone)]
pub struct HomogeneousHamiltonian<G, const D: usize> {
    pub surface: StarshapedSurface<G, D>,
    pub scale: f64,
}

impl<G: CoverGeometry<D>, const D: usize> Hamiltonian<D> for HomogeneousHamiltonian<G, D> {
    fn value(&self, x: &CotangentPoint<D>) -> f64 {
        self.scale * self.surface.f_value(x)
    }

    fn gradient(&self, x: &CotangentPoint<D>) -> PhaseVector<D> {
        self.surface.f_with_gradient(x).1 * self.scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{SolQuotient, Torus2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn round_torus() -> StarshapedSurface<Torus2, 2> {
        StarshapedSurface::new(Torus2::standard(), RadialProfile::Round).unwrap()
    }

    fn ellipse12() -> StarshapedSurface<Torus2, 2> {
        StarshapedSurface::new(
            Torus2::standard(),
            RadialProfile::Ellipse { axes: vec![1.0, 2.0] },
        )
        .unwrap()
    }

    #[test]
    fn f_value_examples() {
        let s = round_torus();
        let x = CotangentPoint::new([0.1, 0.2], [0.3, 0.4]);
        assert!((s.f_value(&x) - 0.25).abs() < 1e-15);
        let e = ellipse12();
        assert!((e.f_value(&CotangentPoint::new([0.0, 0.0], [0.0, 2.0])) - 1.0).abs() < 1e-15);
        assert_eq!(e.f_value(&CotangentPoint::origin([0.5, 0.5])), 0.0);
    }

    #[test]
    fn homogeneity_on_all_profiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let fourier = StarshapedSurface::new(
            Torus2::standard(),
            RadialProfile::Fourier { mean: 1.0, cos: vec![0.1, 0.05], sin: vec![0.0, 0.08] },
        )
        .unwrap();
        let sol = StarshapedSurface::new(
            SolQuotient::default_lattice(),
            RadialProfile::Ellipse { axes: vec![1.0, 1.5, 0.8] },
        )
        .unwrap();
        for _ in 0..100 {
            let x = CotangentPoint::new(
                [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)],
                [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
            );
            for s in [0.5, 2.0, 7.0] {
                for surf in [&fourier, &ellipse12(), &round_torus()] {
                    let a = surf.f_value(&x.scale_fiber(s));
                    let b = s * s * surf.f_value(&x);
                    assert!((a - b).abs() <= 1e-10 * b.abs());
                }
            }
            let y = CotangentPoint::new(
                [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-2.0..2.0)],
                [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
            );
            let a = sol.f_value(&y.scale_fiber(2.0));
            assert!((a - 4.0 * sol.f_value(&y)).abs() <= 1e-10 * a);
        }
    }

    #[test]
    fn euler_identity_on_sigma() {
        let fourier = StarshapedSurface::new(
            Torus2::standard(),
            RadialProfile::Fourier { mean: 1.0, cos: vec![0.2], sin: vec![0.1] },
        )
        .unwrap();
        for u in sample_directions::<2>(64) {
            let x = fourier.point_on_sigma(&[0.3, 0.1], &u);
            let (f, g) = fourier.f_with_gradient(&x);
            assert!((f - 1.0).abs() < 1e-12);
            let radial: f64 = (0..2).map(|i| g.dp[i] * x.p[i]).sum();
            assert!((radial - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn f_gradient_matches_finite_differences() {
        let sol = StarshapedSurface::new(
            SolQuotient::default_lattice(),
            RadialProfile::Ellipse { axes: vec![1.0, 1.5, 0.8] },
        )
        .unwrap();
        let x = CotangentPoint::new([0.2, -0.4, 0.7], [0.3, -0.5, 0.9]);
        let (_, g) = sol.f_with_gradient(&x);
        let h = 1e-6;
        for i in 0..3 {
            let mut a = x;
            let mut b = x;
            a.q[i] += h;
            b.q[i] -= h;
            let fd = (sol.f_value(&a) - sol.f_value(&b)) / (2.0 * h);
            assert!((fd - g.dq[i]).abs() < 1e-6 * (1.0 + fd.abs()));
            let mut a = x;
            let mut b = x;
            a.p[i] += h;
            b.p[i] -= h;
            let fd = (sol.f_value(&a) - sol.f_value(&b)) / (2.0 * h);
            assert!((fd - g.dp[i]).abs() < 1e-6 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn cutoff_examples() {
        let f = CutoffF::new(0.2).unwrap();
        assert_eq!(f.eval(0.03), (0.0, 0.0));
        assert_eq!(f.eval(0.5), (0.5, 1.0));
        let (v, d) = f.eval(0.1);
        assert!(v > 0.0 && v < 0.1);
        assert!(d > 0.0 && d <= 2.0);
        // Regression values of the quintic blend at r = 0.1, ε = 0.2:
        // x = 0.375, S = 0.2752075195…, S′ = 1.6479492…
        assert!((v - 0.027_520_751_953_125).abs() < 1e-15);
        assert!((d - 1.305_175_781_25).abs() < 1e-12);
        assert!(CutoffF::new(0.25).is_err());
        assert!(CutoffF::new(0.0).is_err());
    }

    #[test]
    fn cutoff_is_c1() {
        let f = CutoffF::new(0.2).unwrap();
        for r0 in [0.04, 0.2] {
            let (a, da) = f.eval(r0 - 1e-9);
            let (b, db) = f.eval(r0 + 1e-9);
            assert!((a - b).abs() < 1e-8);
            assert!((da - db).abs() < 1e-6);
        }
    }

    #[test]
    fn shrink_enforces_bounds() {
        let (f, _) = CutoffF::shrink_to_fit(0.2, 2.2).unwrap();
        assert!(f.bounds_hold());
        assert!(f.eps() * f.eps() < 1.0 / (2.0 * 2.2));
        let (_, hi, _) = f.derivative_bounds(CUTOFF_GRID);
        assert!(hi <= 2.0);
    }

    #[test]
    fn calibration_examples() {
        let round = calibrate(&round_torus(), 1.1, CalibrationSampling::default()).unwrap();
        assert_eq!(round.c, 1.0);
        assert!((round.sigma - 2.2).abs() < 1e-12);
        let ell = calibrate(&ellipse12(), 1.1, CalibrationSampling::default()).unwrap();
        assert!((ell.sigma / 1.1 - 4.0).abs() < 1e-12);
        assert!((ell.c - 2.0).abs() < 1e-12);
        let bad = StarshapedSurface::new(
            Torus2::standard(),
            RadialProfile::Fourier { mean: 0.1, cos: vec![0.5], sin: vec![] },
        );
        assert!(matches!(bad, Err(LabError::Calibration(_))));
    }

    #[test]
    fn sandwich_examples() {
        let s = SandwichedHamiltonians::new(round_torus(), 0.2, 1.1, CalibrationSampling::default())
            .unwrap();
        let sig = s.sigma();
        let far = CotangentPoint::new([0.0, 0.0], [3.0, 4.0]);
        let (a, b, c) = s.sandwich_eval(&far);
        let expect = sig * 0.5 * 25.0;
        assert!((a - expect).abs() < 1e-12 && (b - expect).abs() < 1e-12 && (c - expect).abs() < 1e-12);
        let inside = CotangentPoint::new([0.3, 0.3], [0.9f64.sqrt(), 0.0]);
        let (_, k, _) = s.sandwich_eval(&inside);
        assert!((k - 0.9).abs() < 1e-12);
        assert_eq!(s.sandwich_eval(&CotangentPoint::origin([0.1, 0.1])), (0.0, 0.0, 0.0));
    }

    #[test]
    fn homotopy_endpoints() {
        let s = SandwichedHamiltonians::new(ellipse12(), 0.2, 1.1, CalibrationSampling::default())
            .unwrap();
        let x = CotangentPoint::new([0.1, 0.7], [0.8, -1.3]);
        let (gm, _, gp) = s.sandwich_eval(&x);
        let (g0, a0) = s.homotopy_eval(0.0, &x, 2.5);
        let (g1, a1) = s.homotopy_eval(1.0, &x, 2.5);
        assert_eq!((g0, a0), (gm, 2.5));
        assert!((g1 - gp).abs() < 1e-15);
        assert!((a1 - 2.5 / s.sigma()).abs() < 1e-15);
        let mut last = f64::INFINITY;
        for i in 0..=20 {
            let a = s.homotopy_eval(i as f64 / 20.0, &x, 2.5).1;
            assert!(a <= last);
            last = a;
        }
    }

    #[test]
    fn homotopy_midpoint_against_independent_beta() {
        let s = SandwichedHamiltonians::new(round_torus(), 0.2, 1.1, CalibrationSampling::default())
            .unwrap();
        let x = CotangentPoint::new([0.0, 0.0], [1.2, 0.5]);
        // β(½) for 6x⁵ − 15x⁴ + 10x³ is exactly ½.
        let b = 6.0 / 32.0 - 15.0 / 16.0 + 10.0 / 8.0;
        let (gm, _, gp) = s.sandwich_eval(&x);
        let (gs, a) = s.homotopy_eval(0.5, &x, 1.5);
        assert!((gs - ((1.0 - b) * gm + b * gp)).abs() < 1e-14);
        assert!((a - 1.5 / (1.0 + b * (s.sigma() - 1.0))).abs() < 1e-14);
    }
}
