//! The quintic smoothstep and the step functions built from it.

/// `S(x) = 6x⁵ − 15x⁴ + 10x³` on `[0, 1]`, clamped to 0 and 1 outside.
/// Returns `(S, S′)`.
pub fn smoothstep(x: f64) -> (f64, f64) {
    if x <= 0.0 {
        (0.0, 0.0)
    } else if x >= 1.0 {
        (1.0, 0.0)
    } else {
        let x2 = x * x;
        let value = x2 * x * (10.0 + x * (-15.0 + 6.0 * x));
        let deriv = 30.0 * x2 * (1.0 - x) * (1.0 - x);
        (value, deriv)
    }
}

/// `τ`: 0 for `r ≤ 2`, 1 for `r ≥ 4`, nondecreasing. Returns `(τ, τ′)`.
pub fn tau(r: f64) -> (f64, f64) {
    let (v, d) = smoothstep((r - 2.0) / 2.0);
    (v, d / 2.0)
}

/// `β`: 0 for `s ≤ 0`, 1 for `s ≥ 1`, nondecreasing. Returns `(β, β′)`.
pub fn beta(s: f64) -> (f64, f64) {
    smoothstep(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_symmetry() {
        assert_eq!(smoothstep(0.0), (0.0, 0.0));
        assert_eq!(smoothstep(1.0), (1.0, 0.0));
        let (v, d) = smoothstep(0.5);
        assert!((v - 0.5).abs() < 1e-15);
        assert!((d - 1.875).abs() < 1e-15);
        for i in 1..100 {
            let x = i as f64 / 100.0;
            assert!((smoothstep(x).0 + smoothstep(1.0 - x).0 - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for i in 1..200 {
            let x = -0.2 + 1.4 * i as f64 / 200.0;
            let h = 1e-6;
            let fd = (smoothstep(x + h).0 - smoothstep(x - h).0) / (2.0 * h);
            assert!((fd - smoothstep(x).1).abs() < 1e-7, "x = {x}");
        }
    }

    #[test]
    fn tau_plateaus() {
        assert_eq!(tau(1.9), (0.0, 0.0));
        assert_eq!(tau(4.5), (1.0, 0.0));
        assert!(tau(3.0).0 > 0.0 && tau(3.0).0 < 1.0);
    }
}
