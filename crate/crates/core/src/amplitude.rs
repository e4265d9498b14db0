//! Angular biphoton amplitude of non-collinear, frequency-degenerate type-I
//! SPDC and its two Gaussian approximations.
//!
//! All three forms factor into a Gaussian in the sum `s = θ₁+θ₂` times a
//! profile in the difference `d = θ₁−θ₂`:
//!
//! ```text
//! exact      : sinc(x)                         x = (d² − 4θ₀²) / (2Δθ_L²)
//! gauss_sinc : exp(−0.195 x²)
//! two_peak   : exp(−c (d − 2θ₀)²) + exp(−c (d + 2θ₀)²),   c = 0.78 θ₀²/Δθ_L⁴
//! ```
//!
//! so normalization reduces to 1D integrals over `d` (`dθ₁dθ₂ = ds dd / 2`).

use std::f64::consts::{FRAC_PI_2, PI};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{compensated_sum, integrate_panels, Grid1D};
use crate::special::{gauss_sinc, sinc, SINC_GAUSS_COEFF};

/// Exponent coefficient of each Gaussian peak in the two-peak form (4 × 0.195).
pub const TWO_PEAK_COEFF: f64 = 0.78;
/// Narrowness ratio above which a geometry is flagged as straining the model.
pub const NARROW_RATIO_LIMIT: f64 = 0.2;
/// Central emission angle (rad) above which the small-angle picture is strained.
pub const CENTRAL_ANGLE_LIMIT: f64 = 0.3;
/// Allowed cross-term mass between the two peaks.
pub const PEAK_OVERLAP_LIMIT: f64 = 1e-4;
pub const DEFAULT_GRID_POINTS: usize = 1024;
/// Default window: `[−θ₀ − 8w, θ₀ + 8w]`.
pub const DEFAULT_WINDOW_WIDTHS: f64 = 8.0;
/// Default bound on amplitude mass falling outside a sampling grid.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-8;

/// Physical inputs (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalOpticalParams {
    /// Pump wavelength (m).
    pub lambda_p: f64,
    pub n_o: f64,
    pub n_e: f64,
    /// Refractive index along the pump axis.
    pub n_0: f64,
    /// Crystal length (m).
    pub length: f64,
    /// Pump waist (m).
    pub waist: f64,
}

impl CrystalOpticalParams {
    /// 405 nm pump, n₀ = 1.66, n_o − n_e = 0.01, L = 2 mm, d = 100 µm.
    pub fn example() -> Self {
        Self {
            lambda_p: 405e-9,
            n_o: 1.66,
            n_e: 1.65,
            n_0: 1.66,
            length: 2e-3,
            waist: 1e-4,
        }
    }
}

/// Angular widths and central angle (rad).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamGeometry {
    pub delta_theta_p: f64,
    pub delta_theta_l: f64,
    pub theta_0: f64,
    /// Δθ_p / θ₀.
    pub ratio_p: f64,
    /// Δθ_L / θ₀.
    pub ratio_l: f64,
    pub assumption_strained: bool,
}

impl BeamGeometry {
    pub fn new(delta_theta_p: f64, delta_theta_l: f64, theta_0: f64) -> Result<Self> {
        for (name, v) in [("Δθ_p", delta_theta_p), ("Δθ_L", delta_theta_l), ("θ₀", theta_0)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::geometry(format!("{name} must be positive and finite, got {v}")));
            }
        }
        let ratio_p = delta_theta_p / theta_0;
        let ratio_l = delta_theta_l / theta_0;
        Ok(Self {
            delta_theta_p,
            delta_theta_l,
            theta_0,
            ratio_p,
            ratio_l,
            assumption_strained: ratio_p.max(ratio_l) > NARROW_RATIO_LIMIT
                || theta_0 > CENTRAL_ANGLE_LIMIT,
        })
    }

    /// `w = max(Δθ_p, Δθ_L²/θ₀)`, the scale of a single peak.
    pub fn characteristic_width(&self) -> f64 {
        self.delta_theta_p
            .max(self.delta_theta_l * self.delta_theta_l / self.theta_0)
    }

    pub fn default_half_width(&self) -> f64 {
        self.theta_0 + DEFAULT_WINDOW_WIDTHS * self.characteristic_width()
    }

    /// Uniform grid over the default window.
    pub fn default_grid(&self, n: usize) -> Result<Grid1D> {
        Grid1D::symmetric(self.default_half_width(), n)
    }

    /// Two patches `±θ₀ ± 8w`, resolving the peaks independently of θ₀/w.
    pub fn peak_grid(&self, n: usize) -> Result<Grid1D> {
        let h = DEFAULT_WINDOW_WIDTHS * self.characteristic_width();
        let t = self.theta_0;
        Grid1D::composite(&[(-t - h, -t + h), (t - h, t + h)], n)
    }

    /// Three patches around `−θ₀`, `0`, `+θ₀`: covers both the two-beam
    /// and the merged single-beam stages.
    pub fn pipeline_grid(&self, n: usize) -> Result<Grid1D> {
        let h = DEFAULT_WINDOW_WIDTHS * self.characteristic_width();
        let t = self.theta_0;
        Grid1D::composite(&[(-t - h, -t + h), (-h, h), (t - h, t + h)], n)
    }

    /// `c = 0.78 θ₀² / Δθ_L⁴`.
    pub fn peak_exponent(&self) -> f64 {
        TWO_PEAK_COEFF * self.theta_0 * self.theta_0 / self.delta_theta_l.powi(4)
    }

    /// `x(d) = (d² − 4θ₀²) / (2Δθ_L²)`.
    pub fn sinc_argument(&self, d: f64) -> f64 {
        (d * d - 4.0 * self.theta_0 * self.theta_0) / (2.0 * self.delta_theta_l * self.delta_theta_l)
    }

    fn d_of_x(&self, x: f64) -> f64 {
        let t = 4.0 * self.theta_0 * self.theta_0 + 2.0 * self.delta_theta_l * self.delta_theta_l * x;
        t.max(0.0).sqrt()
    }
}

pub fn derive_widths(params: &CrystalOpticalParams) -> Result<BeamGeometry> {
    let p = params;
    for (name, v) in [
        ("lambda_p", p.lambda_p),
        ("n_o", p.n_o),
        ("n_e", p.n_e),
        ("n_0", p.n_0),
        ("length", p.length),
        ("waist", p.waist),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::geometry(format!("{name} must be positive and finite, got {v}")));
        }
    }
    if p.n_o <= p.n_e {
        return Err(Error::geometry(format!(
            "n_o = {} must exceed n_e = {} for a real emission angle",
            p.n_o, p.n_e
        )));
    }
    let dp = p.lambda_p / (PI * p.n_0 * p.waist);
    let dl = (2.0 * p.lambda_p / (PI * p.n_0 * p.length)).sqrt();
    let t0 = (2.0 * (p.n_o - p.n_e) / p.n_0).sqrt();
    BeamGeometry::new(dp, dl, t0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeKind {
    ExactSinc,
    GaussSinc,
    TwoPeakGauss,
}

impl AmplitudeKind {
    pub fn is_gaussian(self) -> bool {
        matches!(self, AmplitudeKind::TwoPeakGauss)
    }

    pub fn name(self) -> &'static str {
        match self {
            AmplitudeKind::ExactSinc => "exact_sinc",
            AmplitudeKind::GaussSinc => "gauss_sinc",
            AmplitudeKind::TwoPeakGauss => "two_peak_gauss",
        }
    }
}

/// A normalized biphoton angular amplitude `Ψ(θ₁, θ₂) = N · shape(θ₁, θ₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiphotonAmplitude {
    pub kind: AmplitudeKind,
    pub geometry: BeamGeometry,
    /// Normalization factor N.
    pub norm: f64,
    /// Share of ∬|shape|² carried by the interference of the two peaks
    /// (two-peak form only; zero otherwise).
    pub cross_fraction: f64,
}

const D_PANEL_ORDER: usize = 12;
const D_PANEL_CHECK_ORDER: usize = 16;
const QUAD_REL_TOL: f64 = 1e-10;
/// Upper sinc argument integrated panel by panel (a multiple of π).
const EXACT_X_CUTOFF: f64 = 4000.0 * PI;
/// exp(−0.39 x²) < 1e-30 beyond this.
const GAUSS_X_CUTOFF: f64 = 14.0;

impl BiphotonAmplitude {
    pub fn new(kind: AmplitudeKind, geometry: BeamGeometry) -> Result<Self> {
        let mut amp = Self { kind, geometry, norm: 1.0, cross_fraction: 0.0 };
        let d_integral = amp.difference_integral()?;
        let s_integral = PI.sqrt() * geometry.delta_theta_p;
        amp.norm = 1.0 / (0.5 * s_integral * d_integral).sqrt();
        if kind == AmplitudeKind::TwoPeakGauss {
            let c = geometry.peak_exponent();
            let overlap = (-8.0 * c * geometry.theta_0 * geometry.theta_0).exp();
            amp.cross_fraction = overlap / (1.0 + overlap);
        }
        Ok(amp)
    }

    /// Profile in the sum variable `s = θ₁+θ₂`.
    pub fn sum_profile(&self, s: f64) -> f64 {
        let dp = self.geometry.delta_theta_p;
        (-s * s / (2.0 * dp * dp)).exp()
    }

    /// Profile in the difference variable `d = θ₁−θ₂`.
    pub fn difference_profile(&self, d: f64) -> f64 {
        let g = &self.geometry;
        match self.kind {
            AmplitudeKind::ExactSinc => sinc(g.sinc_argument(d)),
            AmplitudeKind::GaussSinc => gauss_sinc(g.sinc_argument(d)),
            AmplitudeKind::TwoPeakGauss => {
                let c = g.peak_exponent();
                let u = 2.0 * g.theta_0;
                (-c * (d - u) * (d - u)).exp() + (-c * (d + u) * (d + u)).exp()
            }
        }
    }

    /// Unnormalized amplitude.
    pub fn shape(&self, theta1: f64, theta2: f64) -> f64 {
        self.sum_profile(theta1 + theta2) * self.difference_profile(theta1 - theta2)
    }

    pub fn value(&self, theta1: f64, theta2: f64) -> f64 {
        self.norm * self.shape(theta1, theta2)
    }

    pub fn peaks_separated(&self) -> bool {
        self.cross_fraction <= PEAK_OVERLAP_LIMIT
    }

    pub fn ensure_peaks_separated(&self) -> Result<()> {
        if self.peaks_separated() {
            Ok(())
        } else {
            Err(Error::PeaksNotSeparated {
                cross_fraction: self.cross_fraction,
                limit: PEAK_OVERLAP_LIMIT,
            })
        }
    }

    /// `∫ |difference_profile(d)|² dd` over the real line.
    pub fn difference_integral(&self) -> Result<f64> {
        let g = &self.geometry;
        match self.kind {
            AmplitudeKind::TwoPeakGauss => {
                let c = g.peak_exponent();
                let base = (PI / (2.0 * c)).sqrt();
                Ok(base * (2.0 + 2.0 * (-8.0 * c * g.theta_0 * g.theta_0).exp()))
            }
            _ => {
                let coarse = 2.0 * self.half_line_integral(0.0, D_PANEL_ORDER);
                let fine = 2.0 * self.half_line_integral(0.0, D_PANEL_CHECK_ORDER);
                let achieved = ((coarse - fine) / fine).abs();
                if !(achieved <= QUAD_REL_TOL) {
                    return Err(Error::Quadrature { achieved, requested: QUAD_REL_TOL });
                }
                Ok(fine)
            }
        }
    }

    /// Share of ∫|difference_profile|² with `|d| > d_cut`.
    pub fn difference_tail_fraction(&self, d_cut: f64) -> Result<f64> {
        let d_cut = d_cut.max(0.0);
        let total = self.difference_integral()?;
        let g = &self.geometry;
        let tail = match self.kind {
            AmplitudeKind::TwoPeakGauss => {
                let c = g.peak_exponent();
                let u = 2.0 * g.theta_0;
                let r = (2.0 * c).sqrt();
                let half = 0.5 * (PI / (2.0 * c)).sqrt();
                // both signs of d: each peak contributes its two tails
                let peaks = half * (libm::erfc(r * (d_cut - u)) + libm::erfc(r * (d_cut + u)));
                let cross = 2.0 * (-2.0 * c * u * u).exp() * half * libm::erfc(r * d_cut);
                2.0 * (peaks + cross)
            }
            _ => 2.0 * self.half_line_integral(d_cut, D_PANEL_CHECK_ORDER),
        };
        Ok((tail / total).clamp(0.0, 1.0))
    }

    /// `∫_{d_start}^∞ |difference_profile(d)|² dd` for the sinc-type kinds,
    /// panelled at multiples of π/2 in the sinc argument.
    fn half_line_integral(&self, d_start: f64, order: usize) -> f64 {
        let g = self.geometry;
        let (x_lo, x_hi) = match self.kind {
            AmplitudeKind::ExactSinc => (f64::NEG_INFINITY, EXACT_X_CUTOFF),
            _ => (-GAUSS_X_CUTOFF, GAUSS_X_CUTOFF),
        };
        let x_start = g.sinc_argument(d_start).max(x_lo);
        if x_start >= x_hi {
            return if self.kind == AmplitudeKind::ExactSinc {
                exact_sinc_tail(&g, x_start)
            } else {
                0.0
            };
        }
        let d_first = if x_start > g.sinc_argument(d_start) { g.d_of_x(x_start) } else { d_start };
        let mut breaks = vec![d_first];
        let k0 = (x_start / FRAC_PI_2).floor() as i64 + 1;
        let k1 = (x_hi / FRAC_PI_2).round() as i64;
        for k in k0..=k1 {
            breaks.push(g.d_of_x(k as f64 * FRAC_PI_2));
        }
        let profile = |d: f64| {
            let v = self.difference_profile(d);
            v * v
        };
        let mut total = integrate_panels(&breaks, order, profile);
        if self.kind == AmplitudeKind::ExactSinc {
            total += exact_sinc_tail(&g, x_hi.max(x_start));
        }
        total
    }
}

/// `∫_{X}^∞ sinc²(x) (dd/dx) dx` for `X` a multiple of π (or beyond the
/// panelled range): the mean part `1/(2x²)` by substitution `x = 1/τ²`, the
/// oscillating part `−cos(2x)/(2x²)` by two integrations by parts.
fn exact_sinc_tail(g: &BeamGeometry, x0: f64) -> f64 {
    let dl2 = g.delta_theta_l * g.delta_theta_l;
    let t0sq = 4.0 * g.theta_0 * g.theta_0;
    let jac = |x: f64| dl2 / (t0sq + 2.0 * dl2 * x).sqrt();
    // mean: ∫ jac(x)/(2x²) dx, x = 1/τ², dx = −2/τ³ dτ → ∫_0^{1/√X} τ jac(1/τ²) dτ
    let tau_max = 1.0 / x0.sqrt();
    let mean = integrate_panels(&[0.0, 0.5 * tau_max, tau_max], 20, |tau| {
        if tau == 0.0 {
            0.0
        } else {
            tau * jac(1.0 / (tau * tau))
        }
    });
    // oscillating: −½∫ cos(2x) q(x) dx with q = jac/x²
    let q = |x: f64| jac(x) / (x * x);
    let h = 1e-3 * x0;
    let dq = (q(x0 + h) - q(x0 - h)) / (2.0 * h);
    let osc = -0.5 * ((2.0 * x0).sin() * -0.5 * q(x0) + (2.0 * x0).cos() * -0.25 * dq);
    mean + osc
}

pub fn exact_amplitude(geom: &BeamGeometry) -> Result<BiphotonAmplitude> {
    BiphotonAmplitude::new(AmplitudeKind::ExactSinc, *geom)
}

pub fn gauss_sinc_amplitude(geom: &BeamGeometry) -> Result<BiphotonAmplitude> {
    BiphotonAmplitude::new(AmplitudeKind::GaussSinc, *geom)
}

pub fn two_peak_amplitude(geom: &BeamGeometry) -> Result<BiphotonAmplitude> {
    BiphotonAmplitude::new(AmplitudeKind::TwoPeakGauss, *geom)
}

/// Amplitude values on a product grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledAmplitude {
    pub grid1: Grid1D,
    pub grid2: Grid1D,
    /// `values[[i, j]] = Ψ(grid1[i], grid2[j])`.
    pub values: Array2<f64>,
}

impl SampledAmplitude {
    /// Samples any real amplitude function, rows in parallel.
    pub fn from_fn(grid1: Grid1D, grid2: Grid1D, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let n1 = grid1.len();
        let n2 = grid2.len();
        let rows: Vec<f64> = grid1
            .nodes()
            .par_iter()
            .flat_map_iter(|&t1| grid2.nodes().iter().map(|&t2| f(t1, t2)).collect::<Vec<_>>())
            .collect();
        let values = Array2::from_shape_vec((n1, n2), rows).expect("grid dimensions");
        Self { grid1, grid2, values }
    }

    /// `∬ |Ψ|²` by the product quadrature.
    pub fn norm_sq(&self) -> f64 {
        let w1 = self.grid1.weights();
        let w2 = self.grid2.weights();
        compensated_sum(
            self.values
                .indexed_iter()
                .map(|((i, j), v)| w1[i] * w2[j] * v * v),
        )
    }

    /// Largest |Ψ| on the grid boundary relative to the largest |Ψ| overall.
    pub fn boundary_ratio(&self) -> f64 {
        let (n1, n2) = self.values.dim();
        let max = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if max == 0.0 {
            return 0.0;
        }
        let mut edge = 0.0f64;
        for i in 0..n1 {
            edge = edge.max(self.values[[i, 0]].abs()).max(self.values[[i, n2 - 1]].abs());
        }
        for j in 0..n2 {
            edge = edge.max(self.values[[0, j]].abs()).max(self.values[[n1 - 1, j]].abs());
        }
        edge / max
    }

    pub fn quadrant_masses(&self) -> QuadrantMasses {
        let w1 = self.grid1.weights();
        let w2 = self.grid2.weights();
        let t1 = self.grid1.nodes();
        let t2 = self.grid2.nodes();
        let mut pos_neg = Vec::new();
        let mut neg_pos = Vec::new();
        let mut other = Vec::new();
        for ((i, j), v) in self.values.indexed_iter() {
            let m = w1[i] * w2[j] * v * v;
            if t1[i] > 0.0 && t2[j] < 0.0 {
                pos_neg.push(m);
            } else if t1[i] < 0.0 && t2[j] > 0.0 {
                neg_pos.push(m);
            } else {
                other.push(m);
            }
        }
        QuadrantMasses {
            pos_neg: compensated_sum(pos_neg),
            neg_pos: compensated_sum(neg_pos),
            other: compensated_sum(other),
        }
    }
}

/// Probability mass in the quadrants `{θ₁>0, θ₂<0}`, `{θ₁<0, θ₂>0}` and the rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrantMasses {
    pub pos_neg: f64,
    pub neg_pos: f64,
    pub other: f64,
}

/// Samples `amplitude` and rejects grids that leave more than
/// [`DEFAULT_TAIL_TOLERANCE`] of the mass outside.
pub fn evaluate_on_grid(
    amplitude: &BiphotonAmplitude,
    grid1: &Grid1D,
    grid2: &Grid1D,
) -> Result<SampledAmplitude> {
    evaluate_on_grid_with_tolerance(amplitude, grid1, grid2, DEFAULT_TAIL_TOLERANCE)
}

/// As [`evaluate_on_grid`] with an explicit bound on the outside mass,
/// estimated as `1 − ∬_grid |Ψ|²`.
pub fn evaluate_on_grid_with_tolerance(
    amplitude: &BiphotonAmplitude,
    grid1: &Grid1D,
    grid2: &Grid1D,
    tail_tolerance: f64,
) -> Result<SampledAmplitude> {
    let amp = *amplitude;
    let sampled = SampledAmplitude::from_fn(grid1.clone(), grid2.clone(), move |a, b| amp.value(a, b));
    let outside = 1.0 - sampled.norm_sq();
    if outside > tail_tolerance {
        return Err(Error::InsufficientExtent {
            outside_mass: outside,
            tolerance: tail_tolerance,
            suggested_half_width: suggest_half_width(amplitude, grid1, grid2, tail_tolerance)?,
        });
    }
    Ok(sampled)
}

/// Smallest symmetric half-width (in 25% steps from the current one) whose
/// difference-variable tail plus sum-variable tail falls below `tol`.
fn suggest_half_width(amp: &BiphotonAmplitude, g1: &Grid1D, g2: &Grid1D, tol: f64) -> Result<f64> {
    let current = [g1.min(), g1.max(), g2.min(), g2.max()]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    // P(|s| > S) ≤ exp(−S²/Δθ_p²)
    let s_spread = amp.geometry.delta_theta_p * (2.0 / tol).ln().max(0.0).sqrt();
    let mut h = current;
    for _ in 0..256 {
        let d_cut = (2.0 * h - s_spread).max(0.0);
        if amp.difference_tail_fraction(d_cut)? < 0.5 * tol {
            return Ok(h);
        }
        h *= 1.25;
    }
    Ok(h)
}

/// Integration region for [`approximation_error`].
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// Product grid in (θ₁, θ₂); profiles are along θ₁ and θ₂.
    Grid { theta1: Grid1D, theta2: Grid1D },
    /// The `|x| ≤ x_max` central lobe of the `d > 0` peak, sampled uniformly
    /// in the sum variable (`|s| ≤ 3Δθ_p`, `n_s` points) and the sinc argument
    /// (`n_x` points); profiles are along `s` and `x`.
    CentralLobe { x_max: f64, n_s: usize, n_x: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// `max |f − g|` of the normalized amplitudes.
    pub linf: f64,
    /// `‖f − g‖ / ‖f‖` of the normalized amplitudes.
    pub rel_l2: f64,
    /// `max |shape_f − shape_g|` (normalization factors removed).
    pub shape_linf: f64,
    pub shape_rel_l2: f64,
    /// `(coordinate, max over the other axis of |f − g|)` along the first axis.
    pub axis1: Vec<(f64, f64)>,
    pub axis2: Vec<(f64, f64)>,
}

pub fn approximation_error(
    f: &BiphotonAmplitude,
    g: &BiphotonAmplitude,
    region: &Region,
) -> Result<ErrorReport> {
    if f.geometry != g.geometry {
        return Err(Error::invalid("amplitudes must share one geometry"));
    }
    let geom = f.geometry;
    // (axis1 coordinate, axis2 coordinate, weight, θ₁, θ₂)
    let (ax1, ax2, w1, w2, points): (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Box<dyn Fn(usize, usize) -> (f64, f64)>) =
        match region {
            Region::Grid { theta1, theta2 } => {
                let (n1, n2) = (theta1.nodes().to_vec(), theta2.nodes().to_vec());
                let (a, b) = (n1.clone(), n2.clone());
                (n1, n2, theta1.weights().to_vec(), theta2.weights().to_vec(), Box::new(move |i, j| (a[i], b[j])))
            }
            &Region::CentralLobe { x_max, n_s, n_x } => {
                if n_s < 2 || n_x < 2 || !(x_max > 0.0) {
                    return Err(Error::invalid("central-lobe region needs n_s, n_x ≥ 2 and x_max > 0"));
                }
                let s_max = 3.0 * geom.delta_theta_p;
                let s: Vec<f64> = (0..n_s).map(|k| -s_max + 2.0 * s_max * k as f64 / (n_s - 1) as f64).collect();
                let x_min = geom.sinc_argument(0.0).max(-x_max);
                let x: Vec<f64> = (0..n_x).map(|k| x_min + (x_max - x_min) * k as f64 / (n_x - 1) as f64).collect();
                let (sc, xc) = (s.clone(), x.clone());
                (
                    s,
                    x,
                    vec![1.0; n_s],
                    vec![1.0; n_x],
                    Box::new(move |i, j| {
                        let d = geom.d_of_x(xc[j]);
                        (0.5 * (sc[i] + d), 0.5 * (sc[i] - d))
                    }),
                )
            }
        };

    let mut diff_sq = Vec::with_capacity(ax1.len() * ax2.len());
    let mut ref_sq = Vec::with_capacity(ax1.len() * ax2.len());
    let mut shape_diff_sq = Vec::with_capacity(ax1.len() * ax2.len());
    let mut shape_ref_sq = Vec::with_capacity(ax1.len() * ax2.len());
    let mut prof1 = vec![0.0f64; ax1.len()];
    let mut prof2 = vec![0.0f64; ax2.len()];
    let (mut linf, mut shape_linf) = (0.0f64, 0.0f64);
    for i in 0..ax1.len() {
        for j in 0..ax2.len() {
            let (t1, t2) = points(i, j);
            let (sf, sg) = (f.shape(t1, t2), g.shape(t1, t2));
            let (vf, vg) = (f.norm * sf, g.norm * sg);
            let e = (vf - vg).abs();
            let se = (sf - sg).abs();
            let w = w1[i] * w2[j];
            diff_sq.push(w * e * e);
            ref_sq.push(w * vf * vf);
            shape_diff_sq.push(w * se * se);
            shape_ref_sq.push(w * sf * sf);
            linf = linf.max(e);
            shape_linf = shape_linf.max(se);
            prof1[i] = prof1[i].max(e);
            prof2[j] = prof2[j].max(e);
        }
    }
    let ratio = |num: Vec<f64>, den: Vec<f64>| {
        let d = compensated_sum(den);
        if d == 0.0 {
            0.0
        } else {
            (compensated_sum(num) / d).sqrt()
        }
    };
    Ok(ErrorReport {
        linf,
        rel_l2: ratio(diff_sq, ref_sq),
        shape_linf,
        shape_rel_l2: ratio(shape_diff_sq, shape_ref_sq),
        axis1: ax1.into_iter().zip(prof1).collect(),
        axis2: ax2.into_iter().zip(prof2).collect(),
    })
}

/// Samples `(x, sinc x, exp(−0.195 x²))` at `n` points on `[−x_max, x_max]`.
pub fn sinc_gauss_curve(x_max: f64, n: usize) -> Vec<(f64, f64, f64)> {
    symmetric_points(x_max, n)
        .map(|x| (x, sinc(x), gauss_sinc(x)))
        .collect()
}

/// `max |sinc x − exp(−0.195 x²)|` over `n` evenly spaced points of `|x| ≤ x_max`.
pub fn sinc_gauss_max_error(x_max: f64, n: usize) -> f64 {
    symmetric_points(x_max, n)
        .map(|x| (sinc(x) - gauss_sinc(x)).abs())
        .fold(0.0, f64::max)
}

/// Super-Gaussian difference profile and its two-Gaussian approximation in
/// units of θ₀ (`u = (θ₁−θ₂)/θ₀`, Δθ_L = `ratio`·θ₀).
pub fn super_gauss_curve(ratio: f64, u_max: f64, n: usize) -> Vec<(f64, f64, f64)> {
    let r4 = ratio.powi(4);
    symmetric_points(u_max, n)
        .map(|u| {
            let sg = (-SINC_GAUSS_COEFF / (4.0 * r4) * (u * u - 4.0).powi(2)).exp();
            let two = (-TWO_PEAK_COEFF / r4 * (u - 2.0).powi(2)).exp()
                + (-TWO_PEAK_COEFF / r4 * (u + 2.0).powi(2)).exp();
            (u, sg, two)
        })
        .collect()
}

/// `‖superGauss − twoGauss‖₂ / ‖superGauss‖₂` over `|u| ≤ u_max` (trapezoid).
pub fn super_gauss_relative_l2(ratio: f64, u_max: f64, n: usize) -> f64 {
    let curve = super_gauss_curve(ratio, u_max, n);
    let h = 2.0 * u_max / (n - 1) as f64;
    let w = |k: usize| if k == 0 || k == n - 1 { 0.5 * h } else { h };
    let num = compensated_sum(curve.iter().enumerate().map(|(k, c)| w(k) * (c.1 - c.2).powi(2)));
    let den = compensated_sum(curve.iter().enumerate().map(|(k, c)| w(k) * c.1 * c.1));
    (num / den).sqrt()
}

/// `n` points symmetric about 0, with 0 itself exact when `n` is odd.
fn symmetric_points(half: f64, n: usize) -> impl Iterator<Item = f64> {
    let mid = (n as f64 - 1.0) / 2.0;
    (0..n).map(move |k| (k as f64 - mid) / mid * half)
}
