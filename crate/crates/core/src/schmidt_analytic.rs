//! Closed-form Schmidt decomposition of double-Gaussian amplitudes.
//!
//! A normalized double Gaussian
//! `Φ(θ₁, θ₂) ∝ exp(−(θ₁+θ₂)²/(2a²)) exp(−(θ₁−θ₂)²/(2b²))`
//! decomposes as `Σ sgn(a−b)ⁿ √λₙ ψₙ(θ₁) ψₙ(θ₂)` with Hermite-Gaussian modes
//! of scale `√(ab/2)` and geometric weights `λₙ = λ₀ qⁿ`, `q = ((a−b)/(a+b))²`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::amplitude::{two_peak_amplitude, BeamGeometry, TWO_PEAK_COEFF};
use crate::error::{Error, Result};
use crate::special::{hermite_function, hermite_functions, MAX_HERMITE_ORDER};

/// Tail mass below which the default truncation stops.
pub const DEFAULT_TAIL_MASS: f64 = 1e-10;
pub const MAX_DEFAULT_N: usize = 256;
const ENTROPY_TAIL: f64 = 1e-14;
const ENTROPY_MAX_TERMS: usize = 1_000_000;

/// How `(a, b)` are obtained from a beam geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WidthConvention {
    /// Angular widths from equating the two-peak exponents with the
    /// double-Gaussian form: `a = Δθ_p`, `b = Δθ_L²/(θ₀√1.56)`.
    #[default]
    Matched,
    /// Dimensionless `a = θ₀/Δθ_p`, `b = 0.8θ₀²/Δθ_L²`.
    #[serde(alias = "paper_literal")]
    PaperLiteral,
    /// Widths given directly.
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergedWidths {
    /// Width in the sum variable.
    pub a: f64,
    /// Width in the difference variable.
    pub b: f64,
    pub convention: WidthConvention,
}

impl MergedWidths {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0 && b.is_finite() && b > 0.0) {
            return Err(Error::invalid(format!("widths must be positive and finite, got a={a}, b={b}")));
        }
        Ok(Self { a, b, convention: WidthConvention::Explicit })
    }

    /// `q = ((a−b)/(a+b))²`, the ratio of consecutive weights.
    pub fn ratio(&self) -> f64 {
        let t = (self.a - self.b) / (self.a + self.b);
        t * t
    }

    /// `(a²+b²)/(2ab)`, the Schmidt number of the collinear kernel.
    pub fn collinear_schmidt_number(&self) -> f64 {
        (self.a * self.a + self.b * self.b) / (2.0 * self.a * self.b)
    }

    /// Normalized collinear double Gaussian `Φ(θ₁−c, θ₂−c)`.
    pub fn kernel(&self, theta1: f64, theta2: f64) -> f64 {
        let (a, b) = (self.a, self.b);
        let s = theta1 + theta2;
        let d = theta1 - theta2;
        (2.0 / (PI * a * b)).sqrt() * (-s * s / (2.0 * a * a) - d * d / (2.0 * b * b)).exp()
    }
}

pub fn merged_widths(geom: &BeamGeometry, convention: WidthConvention) -> MergedWidths {
    let (dp, dl, t0) = (geom.delta_theta_p, geom.delta_theta_l, geom.theta_0);
    let (a, b) = match convention {
        WidthConvention::PaperLiteral => (t0 / dp, 0.8 * t0 * t0 / (dl * dl)),
        _ => (dp, dl * dl / (t0 * (2.0 * TWO_PEAK_COEFF).sqrt())),
    };
    MergedWidths {
        a,
        b,
        convention: match convention {
            WidthConvention::PaperLiteral => WidthConvention::PaperLiteral,
            _ => WidthConvention::Matched,
        },
    }
}

/// Hermite-Gaussian Schmidt mode `ψₙ(x − center)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFunction {
    pub n: usize,
    pub widths: MergedWidths,
    pub center: f64,
}

impl ModeFunction {
    fn scale(&self) -> f64 {
        (0.5 * self.widths.a * self.widths.b).sqrt()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let s = self.scale();
        hermite_function(self.n, (x - self.center) / s) / s.sqrt()
    }
}

/// `ψₙ(x) = (2/ab)^{1/4} hₙ(√2 (x − center)/√(ab))`, hₙ the normalized
/// Hermite function.
pub fn hermite_gauss_mode(n: usize, widths: MergedWidths, center: f64) -> Result<ModeFunction> {
    if n > MAX_HERMITE_ORDER {
        return Err(Error::invalid(format!("mode order {n} exceeds {MAX_HERMITE_ORDER}")));
    }
    Ok(ModeFunction { n, widths, center })
}

/// `ψ₀(x) … ψ_{n_max}(x)` for one center in a single recurrence pass.
pub fn mode_values(n_max: usize, widths: &MergedWidths, center: f64, x: f64) -> Vec<f64> {
    let s = (0.5 * widths.a * widths.b).sqrt();
    let inv = 1.0 / s.sqrt();
    let mut v = hermite_functions(n_max, (x - center) / s);
    v.iter_mut().for_each(|h| *h *= inv);
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtSpectrum {
    /// `λ₀ ≥ λ₁ ≥ …`. A degenerate spectrum lists each λₙ once; see [`Self::weights`].
    pub lambdas: Vec<f64>,
    /// Present when the spectrum comes from a double Gaussian.
    pub widths: Option<MergedWidths>,
    pub degenerate: bool,
    pub n_max: usize,
}

impl SchmidtSpectrum {
    /// Spectrum from explicit weights (sorted descending on construction).
    pub fn from_weights(mut lambdas: Vec<f64>, degenerate: bool) -> Result<Self> {
        if lambdas.is_empty() || lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::invalid("weights must be a non-empty list of non-negative numbers"));
        }
        lambdas.sort_by(|a, b| b.total_cmp(a));
        let n_max = lambdas.len() - 1;
        Ok(Self { lambdas, widths: None, degenerate, n_max })
    }

    /// `Σ_{n>n_max} λₙ`.
    pub fn tail_mass(&self) -> f64 {
        match self.widths {
            Some(w) => w.ratio().powi(self.n_max as i32 + 1),
            None => (1.0 - self.lambdas.iter().sum::<f64>()).max(0.0),
        }
    }

    /// Signed reconstruction coefficient `sgn(a−b)ⁿ √λₙ`.
    pub fn coefficient(&self, n: usize) -> f64 {
        let c = self.lambdas[n].sqrt();
        match self.widths {
            Some(w) if w.a < w.b && n % 2 == 1 => -c,
            _ => c,
        }
    }

    /// Reduced-state eigenvalues: λₙ, or (λₙ/2, λₙ/2) pairs when degenerate.
    pub fn weights(&self) -> Vec<f64> {
        if self.degenerate {
            self.lambdas.iter().flat_map(|l| [0.5 * l, 0.5 * l]).collect()
        } else {
            self.lambdas.clone()
        }
    }
}

/// Smallest `N` with `Σ_{n>N} λₙ < 1e-10`, capped at 256.
pub fn default_n_max(widths: &MergedWidths) -> usize {
    let q = widths.ratio();
    if q == 0.0 {
        return 0;
    }
    let mut tail = q;
    let mut n = 0;
    while tail >= DEFAULT_TAIL_MASS && n < MAX_DEFAULT_N {
        tail *= q;
        n += 1;
    }
    n
}

/// `λₙ = 4ab (a−b)^{2n} / (a+b)^{2(n+1)}` for `n = 0..=n_max`.
pub fn collinear_spectrum(widths: MergedWidths, n_max: usize) -> SchmidtSpectrum {
    let (a, b) = (widths.a, widths.b);
    let lambda0 = 4.0 * a * b / ((a + b) * (a + b));
    let q = widths.ratio();
    let mut lambdas = Vec::with_capacity(n_max + 1);
    let mut l = lambda0;
    for _ in 0..=n_max {
        lambdas.push(l);
        l *= q;
    }
    SchmidtSpectrum { lambdas, widths: Some(widths), degenerate: false, n_max }
}

/// Two-quadrant decomposition of the two-peak amplitude: weights λₙ/2 with
/// mode families centred on `±θ₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoncollinearDecomposition {
    pub spectrum: SchmidtSpectrum,
    pub theta_0: f64,
}

impl NoncollinearDecomposition {
    pub fn widths(&self) -> MergedWidths {
        self.spectrum.widths.expect("analytic spectrum carries widths")
    }

    /// `ψₙ(θ − θ₀)`.
    pub fn mode_plus(&self, n: usize) -> Result<ModeFunction> {
        hermite_gauss_mode(n, self.widths(), self.theta_0)
    }

    /// `ψₙ(θ + θ₀)`.
    pub fn mode_minus(&self, n: usize) -> Result<ModeFunction> {
        hermite_gauss_mode(n, self.widths(), -self.theta_0)
    }

    /// `Σ c̃ₙ {ψₙ(θ₁−θ₀)ψₙ(θ₂+θ₀) + ψₙ(θ₁+θ₀)ψₙ(θ₂−θ₀)}` with
    /// `c̃ₙ = sgn(a−b)ⁿ √(λₙ/2)`: the two-peak amplitude itself, whose peaks sit
    /// at `(θ₀, −θ₀)` and `(−θ₀, θ₀)`.
    pub fn reconstruct(&self, theta1: f64, theta2: f64) -> f64 {
        let w = self.widths();
        let n = self.spectrum.n_max;
        let t0 = self.theta_0;
        let p1 = mode_values(n, &w, t0, theta1);
        let m1 = mode_values(n, &w, -t0, theta1);
        let p2 = mode_values(n, &w, t0, theta2);
        let m2 = mode_values(n, &w, -t0, theta2);
        (0..=n)
            .map(|k| {
                let c = self.spectrum.coefficient(k) * std::f64::consts::FRAC_1_SQRT_2;
                c * (p1[k] * m2[k] + m1[k] * p2[k])
            })
            .sum()
    }
}

impl NoncollinearDecomposition {
    /// The same decomposition after the beams are re-separated with both
    /// photons of each pair on one side:
    /// `Σ c̃ₙ {ψₙ(θ₁−θ₀)ψₙ(θ₂−θ₀) + ψₙ(θ₁+θ₀)ψₙ(θ₂+θ₀)}`.
    pub fn reconstruct_same_side(&self, theta1: f64, theta2: f64) -> f64 {
        let w = self.widths();
        let n = self.spectrum.n_max;
        let t0 = self.theta_0;
        let p1 = mode_values(n, &w, t0, theta1);
        let m1 = mode_values(n, &w, -t0, theta1);
        let p2 = mode_values(n, &w, t0, theta2);
        let m2 = mode_values(n, &w, -t0, theta2);
        (0..=n)
            .map(|k| {
                let c = self.spectrum.coefficient(k) * std::f64::consts::FRAC_1_SQRT_2;
                c * (p1[k] * p2[k] + m1[k] * m2[k])
            })
            .sum()
    }
}

pub fn noncollinear_decomposition(
    geom: &BeamGeometry,
    convention: WidthConvention,
    n_max: Option<usize>,
) -> Result<NoncollinearDecomposition> {
    two_peak_amplitude(geom)?.ensure_peaks_separated()?;
    let widths = merged_widths(geom, convention);
    let n_max = n_max.unwrap_or_else(|| default_n_max(&widths));
    if n_max > MAX_HERMITE_ORDER {
        return Err(Error::invalid(format!("n_max {n_max} exceeds {MAX_HERMITE_ORDER}")));
    }
    let mut spectrum = collinear_spectrum(widths, n_max);
    spectrum.degenerate = true;
    Ok(NoncollinearDecomposition { spectrum, theta_0: geom.theta_0 })
}

/// Schmidt number `1/Σwᵢ²` over the reduced-state eigenvalues; closed form
/// `(a²+b²)/(2ab)` (doubled when degenerate) for double-Gaussian spectra.
pub fn schmidt_number(spectrum: &SchmidtSpectrum) -> f64 {
    let single = match spectrum.widths {
        Some(w) => w.collinear_schmidt_number(),
        None => 1.0 / spectrum.lambdas.iter().map(|l| l * l).sum::<f64>(),
    };
    if spectrum.degenerate {
        2.0 * single
    } else {
        single
    }
}

/// Series value of `1/Σλₙ²` from the listed weights (truncation-dependent).
pub fn schmidt_number_series(spectrum: &SchmidtSpectrum) -> f64 {
    let k = 1.0 / spectrum.lambdas.iter().map(|l| l * l).sum::<f64>();
    if spectrum.degenerate {
        2.0 * k
    } else {
        k
    }
}

/// Reduced von Neumann entropy in bits. Double-Gaussian spectra are summed
/// from the analytic series until the tail mass is below 1e-14, and the
/// remainder is added in closed form.
pub fn reduced_entropy(spectrum: &SchmidtSpectrum) -> f64 {
    let h = |l: f64| if l > 0.0 { -l * l.log2() } else { 0.0 };
    let single = match spectrum.widths {
        Some(w) => geometric_entropy(&w),
        None => spectrum.lambdas.iter().map(|&l| h(l)).sum(),
    };
    if spectrum.degenerate {
        1.0 + single
    } else {
        single
    }
}

fn geometric_entropy(w: &MergedWidths) -> f64 {
    let q = w.ratio();
    let lambda0 = 1.0 - q;
    if q == 0.0 {
        return 0.0;
    }
    let (log_l0, log_q) = (lambda0.log2(), q.log2());
    let mut sum = 0.0;
    let mut l = lambda0;
    let mut tail = q;
    let mut n = 0usize;
    while tail >= ENTROPY_TAIL && n < ENTROPY_MAX_TERMS {
        sum -= l * (log_l0 + n as f64 * log_q);
        l *= q;
        tail *= q;
        n += 1;
    }
    {
        // remainder Σ_{k≥n} λ₀qᵏ(−log₂λ₀ − k log₂q) in closed form
        let m = n as f64;
        let qn = q.powf(m);
        let k_sum = qn * (m - (m - 1.0) * q) / ((1.0 - q) * (1.0 - q));
        sum += -log_l0 * qn - lambda0 * log_q * k_sum;
    }
    sum
}
