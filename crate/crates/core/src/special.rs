//! Special functions: `sinc`, its Gaussian surrogate, Hermite functions.

use std::f64::consts::PI;

/// Coefficient of the Gaussian surrogate `sinc x ≈ exp(−0.195 x²)`.
pub const SINC_GAUSS_COEFF: f64 = 0.195;

/// Largest Hermite-Gaussian order accepted by the mode constructors.
pub const MAX_HERMITE_ORDER: usize = 300;

const SINC_SERIES_CUTOFF: f64 = 1e-4;
const RESCALE_ABOVE: f64 = 1e150;

/// `sin x / x`, with `sinc 0 = 1` and a series branch near the origin.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < SINC_SERIES_CUTOFF {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Gaussian approximation of [`sinc`] over its central lobe.
pub fn gauss_sinc(x: f64) -> f64 {
    (-SINC_GAUSS_COEFF * x * x).exp()
}

/// Physicists' Hermite polynomial `H_n(x)` by the three-term recurrence.
///
/// Overflows for large `n·|x|`; intended for moderate orders. Use
/// [`hermite_function`] for normalized values at any order.
pub fn hermite_poly(n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * x;
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Normalized Hermite function `hₙ(u) = (2ⁿ n! √π)^{-1/2} Hₙ(u) e^{−u²/2}`
/// in sign / log-magnitude form.
///
/// The recurrence runs on rescaled values with the scale carried in the log,
/// so neither the factorial nor the Gaussian factor can overflow or underflow
/// prematurely. Returns `(0.0, -inf)` for an exact zero.
pub fn hermite_function_log(n: usize, u: f64) -> (f64, f64) {
    let mut log_scale = -0.5 * u * u - 0.25 * PI.ln();
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * u * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        let mag = cur.abs();
        if mag > RESCALE_ABOVE {
            prev /= mag;
            cur /= mag;
            log_scale += mag.ln();
        }
    }
    if cur == 0.0 {
        (0.0, f64::NEG_INFINITY)
    } else {
        (cur.signum(), cur.abs().ln() + log_scale)
    }
}

/// Normalized Hermite function `hₙ(u)`; see [`hermite_function_log`].
pub fn hermite_function(n: usize, u: f64) -> f64 {
    let (sign, log_abs) = hermite_function_log(n, u);
    sign * log_abs.exp()
}

/// All normalized Hermite functions `h₀(u) … h_{n_max}(u)` in one pass.
pub fn hermite_functions(n_max: usize, u: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut log_scale = -0.5 * u * u - 0.25 * PI.ln();
    let mut prev = 0.0;
    let mut cur = 1.0;
    out.push(log_scale.exp());
    for k in 0..n_max {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * u * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        let mag = cur.abs();
        if mag > RESCALE_ABOVE {
            prev /= mag;
            cur /= mag;
            log_scale += mag.ln();
        }
        out.push(if cur == 0.0 { 0.0 } else { cur.signum() * (cur.abs().ln() + log_scale).exp() });
    }
    out
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and P_{n-1}(x)
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln_factorial(n: usize) -> f64 {
        (1..=n).map(|k| (k as f64).ln()).sum()
    }

    #[test]
    fn sinc_at_zero_is_one() {
        assert_eq!(sinc(0.0), 1.0);
        assert_eq!(gauss_sinc(0.0), 1.0);
    }

    #[test]
    fn sinc_series_matches_direct_formula_at_cutoff() {
        for &x in &[0.99e-4, -0.99e-4, 1.01e-4] {
            assert!((sinc(x) - x.sin() / x).abs() < 1e-15);
        }
        assert!((sinc(PI)).abs() < 1e-15);
    }

    #[test]
    fn hermite_function_matches_explicit_formula() {
        for n in 0..=20 {
            for &u in &[-3.7, -1.0, 0.0, 0.3, 2.2, 5.0] {
                let norm = (-0.5 * (n as f64 * 2f64.ln() + ln_factorial(n) + 0.5 * PI.ln())).exp();
                let explicit = norm * hermite_poly(n, u) * (-0.5 * u * u).exp();
                let got = hermite_function(n, u);
                assert!(
                    (got - explicit).abs() < 1e-12 * (1.0 + explicit.abs()),
                    "n={n} u={u}: {got} vs {explicit}"
                );
            }
        }
    }

    #[test]
    fn batched_hermite_functions_agree_with_single() {
        let all = hermite_functions(60, 4.3);
        for (n, v) in all.iter().enumerate() {
            let single = hermite_function(n, 4.3);
            assert!((v - single).abs() <= 1e-13 * (1.0 + single.abs()));
        }
    }

    #[test]
    fn high_order_hermite_is_finite_and_bounded() {
        // |hₙ(u)| ≤ π^{-1/4} for all n, u
        for &u in &[0.1, 10.0, 24.0, 30.0, 45.0] {
            let v = hermite_function(MAX_HERMITE_ORDER, u);
            assert!(v.is_finite());
            assert!(v.abs() <= PI.powf(-0.25) + 1e-12);
        }
        let (sign, log_abs) = hermite_function_log(MAX_HERMITE_ORDER, 60.0);
        assert!(sign != 0.0 && log_abs.is_finite());
    }

    #[test]
    fn odd_hermite_vanishes_at_origin() {
        assert_eq!(hermite_function(7, 0.0), 0.0);
        assert_eq!(hermite_function_log(7, 0.0).0, 0.0);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(10);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // degree 18 monomial
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(7);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((s - 2.0 / 13.0).abs() < 1e-14);
    }
}
