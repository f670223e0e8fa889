//! One-dimensional transition functions used to build the cut-offs.

use serde::{Deserialize, Serialize};

/// Shape of the monotone transition from 0 to 1 on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transition {
    /// `g(x)/(g(x)+g(1−x))` with `g(t) = e^{−1/t}`: C^∞ and flat at both ends.
    Mollifier,
    /// Generalized smoothstep of order `k` (C^k at both ends).
    Polynomial(u32),
}

impl Transition {
    /// `0` selects the mollifier bridge, `k ≥ 1` the order-`k` polynomial.
    pub fn from_smoothness(k: u32) -> Self {
        if k == 0 {
            Transition::Mollifier
        } else {
            Transition::Polynomial(k)
        }
    }

    /// Rises from 0 (x ≤ 0) to 1 (x ≥ 1) with `step(x) + step(1−x) = 1`.
    pub fn step(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        // evaluate on the lower half and reflect, so the symmetry is exact
        if x > 0.5 {
            return 1.0 - self.step(1.0 - x);
        }
        match *self {
            Transition::Mollifier => {
                let a = (-1.0 / x).exp();
                let b = (-1.0 / (1.0 - x)).exp();
                a / (a + b)
            }
            Transition::Polynomial(k) => smoothstep(k, x),
        }
    }
}

fn binom(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut r = 1.0;
    for i in 0..k {
        r *= (n - i) as f64 / (i + 1) as f64;
    }
    r
}

fn smoothstep(k: u32, x: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..=k {
        s += binom(k + i, i) * binom(2 * k + 1, k - i) * (-x).powi(i as i32);
    }
    x.powi(k as i32 + 1) * s
}

/// Radial cut-off: 1 on `r ≤ 1`, 0 on `r ≥ 2`.
pub fn radial_cutoff(t: Transition, r: f64) -> f64 {
    t.step(2.0 - r)
}

/// Unit-spacing partition bump: 1 on `|x| ≤ 1/4`, 0 on `|x| ≥ 3/4`,
/// `θ(x) + θ(1−x) = 1` on `[1/4, 3/4]`.
pub fn partition_bump(t: Transition, x: f64) -> f64 {
    t.step(2.0 * (0.75 - x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_plateaus() {
        for t in [Transition::Mollifier, Transition::Polynomial(3)] {
            assert_eq!(radial_cutoff(t, 0.5), 1.0);
            assert_eq!(radial_cutoff(t, 1.0), 1.0);
            assert_eq!(radial_cutoff(t, 2.0), 0.0);
            assert_eq!(radial_cutoff(t, 2.5), 0.0);
        }
    }

    #[test]
    fn step_is_reflection_symmetric() {
        for t in [
            Transition::Mollifier,
            Transition::Polynomial(1),
            Transition::Polynomial(2),
            Transition::Polynomial(5),
        ] {
            for i in 0..=100 {
                let x = i as f64 / 100.0;
                assert!((t.step(x) + t.step(1.0 - x) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn smoothstep_low_orders() {
        // 3x² − 2x³ and 6x⁵ − 15x⁴ + 10x³
        let x = 0.3;
        assert!((smoothstep(1, x) - (3.0 * x * x - 2.0 * x * x * x)).abs() < 1e-15);
        let q = 6.0 * x.powi(5) - 15.0 * x.powi(4) + 10.0 * x.powi(3);
        assert!((smoothstep(2, x) - q).abs() < 1e-15);
    }

    #[test]
    fn partition_bump_tiles_the_line() {
        let t = Transition::Mollifier;
        for i in 0..=200 {
            let x = -2.0 + i as f64 * 0.02;
            let s: f64 = (-4..=4).map(|k| partition_bump(t, x - k as f64)).sum();
            assert!((s - 1.0).abs() < 1e-14, "x={x}: {s}");
        }
    }
}
