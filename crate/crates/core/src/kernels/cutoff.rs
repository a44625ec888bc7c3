//! The cutoff `g` of the supercritical construction.

/// Quintic smoothstep `S(u) = 6u⁵ - 15u⁴ + 10u³` in the variable
/// `u = clamp(2r - 1, 0, 1)`: zero on `[0, 1/2]`, one on `[1, ∞)`, `C²`
/// and nondecreasing.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CutoffSpec;

impl CutoffSpec {
    #[inline]
    pub fn g(&self, r: f64) -> f64 {
        let u = (2.0 * r - 1.0).clamp(0.0, 1.0);
        u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
    }

    #[inline]
    pub fn dg(&self, r: f64) -> f64 {
        if !(r > 0.5 && r < 1.0) {
            return 0.0;
        }
        let u = 2.0 * r - 1.0;
        2.0 * 30.0 * u * u * (u - 1.0) * (u - 1.0)
    }

    pub fn d2g(&self, r: f64) -> f64 {
        if !(r > 0.5 && r < 1.0) {
            return 0.0;
        }
        let u = 2.0 * r - 1.0;
        4.0 * 60.0 * u * (u - 1.0) * (2.0 * u - 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn boundary_values() {
        let g = CutoffSpec;
        assert_eq!(g.g(0.0), 0.0);
        assert_eq!(g.g(0.5), 0.0);
        assert_eq!(g.g(1.0), 1.0);
        assert_eq!(g.g(7.0), 1.0);
        assert!((g.g(0.75) - 0.5).abs() < 1e-15);
        assert_eq!(g.dg(0.5), 0.0);
        assert_eq!(g.dg(1.0), 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let g = CutoffSpec;
        let h = 1e-6;
        for i in 1..50 {
            let r = 0.5 + i as f64 / 100.0;
            assert!(((g.g(r + h) - g.g(r - h)) / (2.0 * h) - g.dg(r)).abs() < 1e-6);
            assert!(((g.dg(r + h) - g.dg(r - h)) / (2.0 * h) - g.d2g(r)).abs() < 1e-4);
        }
        // Second derivative vanishes at both ends, so g is C².
        assert!(g.d2g(0.5 + 1e-12).abs() < 1e-9 && g.d2g(1.0 - 1e-12).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn monotone_and_bounded(a in 0.0f64..2.0, b in 0.0f64..2.0) {
            let g = CutoffSpec;
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(g.g(lo) <= g.g(hi));
            prop_assert!(g.dg(a) >= 0.0);
            prop_assert!((0.0..=1.0).contains(&g.g(a)));
        }
    }
}
