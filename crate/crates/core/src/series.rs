//! Power sums Σ z^{-s} by direct summation plus an Euler–Maclaurin remainder.

use libm::pow;

/// Number of explicit terms used for full sums starting at z = 1.
pub const DEFAULT_TERMS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSum {
    pub value: f64,
    /// Bound on the first neglected remainder term.
    pub error_bound: f64,
}

/// Σ_{z ≥ from} z^{-s} for s > 1, summing `terms` values explicitly.
pub fn power_tail(s: f64, from: u64, terms: u64) -> PowerSum {
    debug_assert!(s > 1.0 && from >= 1);
    let a = (from + terms) as f64;
    // smallest terms first
    let mut acc = 0.0;
    let mut z = from + terms;
    while z > from {
        z -= 1;
        acc += pow(z as f64, -s);
    }
    let rem = pow(a, 1.0 - s) / (s - 1.0) + 0.5 * pow(a, -s) + s * pow(a, -s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * pow(a, -s - 3.0) / 720.0;
    let next = s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * pow(a, -s - 5.0) / 30240.0;
    PowerSum { value: acc + rem, error_bound: next + f64::EPSILON * (acc + rem) }
}

/// ζ(s) = Σ_{z ≥ 1} z^{-s}, s > 1.
pub fn zeta(s: f64) -> PowerSum {
    power_tail(s, 1, DEFAULT_TERMS)
}

/// Tails T(x) = Σ_{z ≥ x} z^{-s} for x = 1..=n, as a vector indexed by x - 1.
pub fn power_tails(s: f64, n: usize) -> alloc::vec::Vec<f64> {
    let mut out = alloc::vec![0.0; n];
    if n == 0 {
        return out;
    }
    let mut t = power_tail(s, n as u64, 20_000).value;
    out[n - 1] = t;
    for x in (1..n).rev() {
        t += pow(x as f64, -s);
        out[x - 1] = t;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_two_and_four() {
        let pi = core::f64::consts::PI;
        assert!((zeta(2.0).value - pi * pi / 6.0).abs() < 1e-13);
        assert!((zeta(4.0).value - pi.powi(4) / 90.0).abs() < 1e-14);
        assert!(zeta(4.0).error_bound < 1e-14);
    }

    #[test]
    fn tails_agree_with_direct_difference() {
        let t = power_tails(2.5, 50);
        let full = zeta(2.5).value;
        let head: f64 = (1..10).map(|z| (z as f64).powf(-2.5)).sum();
        assert!((t[0] - full).abs() < 1e-13);
        assert!((t[9] - (full - head)).abs() < 1e-13);
    }
}
