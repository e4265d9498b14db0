//! The polarization-flip / merge / 45° split / unmerge sequence as exact
//! operations on finite sums of tagged two-photon Gaussians, plus the
//! coincidence-to-single width ratio and a seeded sampler for `|Ψ|²`.
//!
//! Each term is `c · exp(−(s−s_c)²/(2a²) − (d−d_c)²/(2b²)) |σ₁σ₂⟩` with
//! `s = θ₁+θ₂`, `d = θ₁−θ₂`. Overlaps are closed-form, so norms and
//! distances are exact up to rounding.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use ndarray::Array2;
use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplitude::{two_peak_amplitude, AmplitudeKind, BeamGeometry, BiphotonAmplitude};
use crate::error::{Error, Result};
use crate::quadrature::{compensated_sum, integrate_panels, Grid1D};
use crate::schmidt_analytic::{merged_widths, MergedWidths, WidthConvention};
use crate::schmidt_numeric::{numeric_schmidt_complex, NumericSpectrum};

/// Tolerance for treating two Gaussian factors as the same.
const SAME_FACTOR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolTag {
    H,
    V,
    D45,
    D135,
}

impl PolTag {
    /// Components in the (H, V) basis; `D45 = (H+V)/√2`, `D135 = (−H+V)/√2`.
    pub fn to_hv(self) -> [f64; 2] {
        match self {
            PolTag::H => [1.0, 0.0],
            PolTag::V => [0.0, 1.0],
            PolTag::D45 => [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
            PolTag::D135 => [-FRAC_1_SQRT_2, FRAC_1_SQRT_2],
        }
    }

    pub fn overlap(self, other: PolTag) -> f64 {
        let (a, b) = (self.to_hv(), other.to_hv());
        a[0] * b[0] + a[1] * b[1]
    }

    /// Half-wave plate exchanging H and V: `(new tag, sign)`.
    pub fn flipped(self) -> (PolTag, f64) {
        match self {
            PolTag::H => (PolTag::V, 1.0),
            PolTag::V => (PolTag::H, 1.0),
            PolTag::D45 => (PolTag::D45, 1.0),
            PolTag::D135 => (PolTag::D135, -1.0),
        }
    }

    fn in_diagonal_basis(self) -> [(PolTag, f64); 2] {
        let v = self.to_hv();
        [
            (PolTag::D45, PolTag::D45.overlap_hv(v)),
            (PolTag::D135, PolTag::D135.overlap_hv(v)),
        ]
    }

    fn in_hv_basis(self) -> [(PolTag, f64); 2] {
        let v = self.to_hv();
        [(PolTag::H, v[0]), (PolTag::V, v[1])]
    }

    fn overlap_hv(self, v: [f64; 2]) -> f64 {
        let a = self.to_hv();
        a[0] * v[0] + a[1] * v[1]
    }
}

/// `exp(−(s−s_c)²/(2a²) − (d−d_c)²/(2b²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFactor {
    pub sum_center: f64,
    pub diff_center: f64,
    pub sum_width: f64,
    pub diff_width: f64,
}

impl GaussianFactor {
    pub fn eval(&self, theta1: f64, theta2: f64) -> f64 {
        let s = theta1 + theta2 - self.sum_center;
        let d = theta1 - theta2 - self.diff_center;
        (-s * s / (2.0 * self.sum_width * self.sum_width) - d * d / (2.0 * self.diff_width * self.diff_width)).exp()
    }

    /// Centers of the photon-1 and photon-2 angular factors.
    pub fn slot_centers(&self) -> (f64, f64) {
        (
            0.5 * (self.sum_center + self.diff_center),
            0.5 * (self.sum_center - self.diff_center),
        )
    }

    fn with_slot_centers(&self, c1: f64, c2: f64) -> Self {
        Self { sum_center: c1 + c2, diff_center: c1 - c2, ..*self }
    }

    /// `∬ G G' dθ₁dθ₂`.
    pub fn overlap(&self, other: &GaussianFactor) -> f64 {
        let one_d = |c1: f64, w1: f64, c2: f64, w2: f64| {
            let v = w1 * w1 + w2 * w2;
            (2.0 * PI * w1 * w1 * w2 * w2 / v).sqrt() * (-(c1 - c2) * (c1 - c2) / (2.0 * v)).exp()
        };
        0.5 * one_d(self.sum_center, self.sum_width, other.sum_center, other.sum_width)
            * one_d(self.diff_center, self.diff_width, other.diff_center, other.diff_width)
    }

    fn same_as(&self, other: &GaussianFactor) -> bool {
        let close = |x: f64, y: f64| (x - y).abs() <= SAME_FACTOR_TOL * (1.0 + x.abs().max(y.abs()));
        close(self.sum_center, other.sum_center)
            && close(self.diff_center, other.diff_center)
            && close(self.sum_width, other.sum_width)
            && close(self.diff_width, other.diff_width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coeff: Complex64,
    pub gaussian: GaussianFactor,
    pub pol: (PolTag, PolTag),
}

/// Joint angular-polarization two-photon state.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedAmplitude {
    pub terms: Vec<Term>,
    /// Central emission angle; channels are told apart by `±θ₀/2`.
    pub theta_0: f64,
}

impl TaggedAmplitude {
    /// `⟨Ψ|Ψ⟩` including every cross term.
    pub fn norm_sq(&self) -> f64 {
        inner(&self.terms, &self.terms).re
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `⟨Ψ|Φ⟩`.
    pub fn inner(&self, other: &TaggedAmplitude) -> Complex64 {
        inner(&self.terms, &other.terms)
    }

    /// `‖Ψ − Φ‖²`.
    pub fn distance_sq(&self, other: &TaggedAmplitude) -> f64 {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(|t| Term { coeff: -t.coeff, ..*t }));
        inner(&terms, &terms).re.max(0.0)
    }

    /// Amplitude components `[σ₁][σ₂]` in the (H, V) basis.
    pub fn eval_hv(&self, theta1: f64, theta2: f64) -> [[Complex64; 2]; 2] {
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for t in &self.terms {
            let g = t.coeff * t.gaussian.eval(theta1, theta2);
            let (p1, p2) = (t.pol.0.to_hv(), t.pol.1.to_hv());
            for (i, a) in p1.iter().enumerate() {
                for (j, b) in p2.iter().enumerate() {
                    out[i][j] += g * (a * b);
                }
            }
        }
        out
    }

    /// Swaps photon labels: `θ₁ ↔ θ₂` together with the polarization slots.
    pub fn exchanged(&self) -> TaggedAmplitude {
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                coeff: t.coeff,
                gaussian: GaussianFactor { diff_center: -t.gaussian.diff_center, ..t.gaussian },
                pol: (t.pol.1, t.pol.0),
            })
            .collect();
        TaggedAmplitude { terms, theta_0: self.theta_0 }
    }

    pub fn is_exchange_symmetric(&self, tol: f64) -> bool {
        self.distance_sq(&self.exchanged()) <= tol * tol * self.norm_sq()
    }

    /// Adds coefficients of terms with the same factor and tags and drops
    /// exact zeros. Term order follows first appearance.
    pub fn simplified(&self) -> TaggedAmplitude {
        let mut out: Vec<Term> = Vec::new();
        for t in &self.terms {
            match out.iter_mut().find(|o| o.pol == t.pol && o.gaussian.same_as(&t.gaussian)) {
                Some(o) => o.coeff += t.coeff,
                None => out.push(*t),
            }
        }
        out.retain(|t| t.coeff.norm() != 0.0);
        TaggedAmplitude { terms: out, theta_0: self.theta_0 }
    }

    fn rewrite_tags(&self, map: impl Fn(PolTag) -> [(PolTag, f64); 2]) -> TaggedAmplitude {
        let mut terms = Vec::with_capacity(4 * self.terms.len());
        for t in &self.terms {
            for (p1, c1) in map(t.pol.0) {
                for (p2, c2) in map(t.pol.1) {
                    if c1 != 0.0 && c2 != 0.0 {
                        terms.push(Term { coeff: t.coeff * (c1 * c2), gaussian: t.gaussian, pol: (p1, p2) });
                    }
                }
            }
        }
        TaggedAmplitude { terms, theta_0: self.theta_0 }.simplified()
    }

    /// Amplitude of the tag pair `(σ₁, σ₂)` at a point, tags taken literally.
    pub fn branch_value(&self, pol: (PolTag, PolTag), theta1: f64, theta2: f64) -> Complex64 {
        self.terms
            .iter()
            .filter(|t| t.pol == pol)
            .map(|t| t.coeff * t.gaussian.eval(theta1, theta2))
            .sum()
    }
}

fn inner(a: &[Term], b: &[Term]) -> Complex64 {
    let mut re = Vec::with_capacity(a.len() * b.len());
    let mut im = Vec::with_capacity(a.len() * b.len());
    for s in a {
        for t in b {
            let pol = s.pol.0.overlap(t.pol.0) * s.pol.1.overlap(t.pol.1);
            if pol == 0.0 {
                continue;
            }
            let v = s.coeff.conj() * t.coeff * (pol * s.gaussian.overlap(&t.gaussian));
            re.push(v.re);
            im.push(v.im);
        }
    }
    Complex64::new(compensated_sum(re), compensated_sum(im))
}

/// Type-I two-peak state with both photons horizontal, widths per the
/// matched convention.
pub fn initial_state(geom: &BeamGeometry) -> Result<TaggedAmplitude> {
    two_peak_amplitude(geom)?.ensure_peaks_separated()?;
    let w = merged_widths(geom, WidthConvention::Matched);
    let factor = |diff_center: f64| GaussianFactor {
        sum_center: 0.0,
        diff_center,
        sum_width: w.a,
        diff_width: w.b,
    };
    let hh = (PolTag::H, PolTag::H);
    let one = Complex64::new(1.0, 0.0);
    let mut state = TaggedAmplitude {
        terms: vec![
            Term { coeff: one, gaussian: factor(2.0 * geom.theta_0), pol: hh },
            Term { coeff: one, gaussian: factor(-2.0 * geom.theta_0), pol: hh },
        ],
        theta_0: geom.theta_0,
    };
    let n = 1.0 / state.norm();
    state.terms.iter_mut().for_each(|t| t.coeff *= n);
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Channel {
    Plus,
    Minus,
}

fn channel(center: f64, theta_0: f64) -> Result<Channel> {
    if center < -0.5 * theta_0 {
        Ok(Channel::Minus)
    } else if center > 0.5 * theta_0 {
        Ok(Channel::Plus)
    } else {
        Err(Error::invalid(format!(
            "term centered at {center:e} rad cannot be assigned to the ±θ₀ channels"
        )))
    }
}

/// H↔V on every photon whose angular factor sits in the `−θ₀` channel.
pub fn flip_polarization(state: &TaggedAmplitude) -> Result<TaggedAmplitude> {
    let mut terms = Vec::with_capacity(state.terms.len());
    for t in &state.terms {
        let (c1, c2) = t.gaussian.slot_centers();
        let mut coeff = t.coeff;
        let mut pol = t.pol;
        if channel(c1, state.theta_0)? == Channel::Minus {
            let (p, s) = pol.0.flipped();
            pol.0 = p;
            coeff *= s;
        }
        if channel(c2, state.theta_0)? == Channel::Minus {
            let (p, s) = pol.1.flipped();
            pol.1 = p;
            coeff *= s;
        }
        terms.push(Term { coeff, gaussian: t.gaussian, pol });
    }
    Ok(TaggedAmplitude { terms, theta_0: state.theta_0 })
}

/// Steers both channels onto the axis (`θ ∓ θ₀ → θ`) and combines the now
/// identical angular factors.
pub fn merge_beams(state: &TaggedAmplitude) -> Result<TaggedAmplitude> {
    let t0 = state.theta_0;
    let mut terms = Vec::with_capacity(state.terms.len());
    for t in &state.terms {
        let (c1, c2) = t.gaussian.slot_centers();
        let shift = |c: f64| -> Result<f64> {
            Ok(match channel(c, t0)? {
                Channel::Plus => c - t0,
                Channel::Minus => c + t0,
            })
        };
        terms.push(Term { gaussian: t.gaussian.with_slot_centers(shift(c1)?, shift(c2)?), ..*t });
    }
    if let Some(first) = terms.first() {
        if terms.iter().any(|t| !t.gaussian.same_as(&first.gaussian)) {
            return Err(Error::invalid("merged terms do not share one angular factor"));
        }
    }
    Ok(TaggedAmplitude { terms, theta_0: t0 }.simplified())
}

/// Rewrites every tag in the diagonal basis (PBS turned by 45°).
pub fn split_45(state: &TaggedAmplitude) -> TaggedAmplitude {
    state.rewrite_tags(PolTag::in_diagonal_basis)
}

/// Rewrites every tag back in the (H, V) basis.
pub fn unsplit_45(state: &TaggedAmplitude) -> TaggedAmplitude {
    state.rewrite_tags(PolTag::in_hv_basis)
}

/// Mirrors send the D45 branch to `+θ₀` and the D135 branch to `−θ₀`; a wave
/// plate then maps D45 → H and D135 → iH, so both branches leave horizontal.
pub fn unmerge(state: &TaggedAmplitude) -> Result<TaggedAmplitude> {
    let t0 = state.theta_0;
    let mut terms = Vec::with_capacity(state.terms.len());
    for t in &state.terms {
        let (c1, c2) = t.gaussian.slot_centers();
        let route = |p: PolTag, c: f64| -> Result<(f64, Complex64)> {
            match p {
                PolTag::D45 => Ok((c + t0, Complex64::new(1.0, 0.0))),
                PolTag::D135 => Ok((c - t0, Complex64::new(0.0, 1.0))),
                other => Err(Error::invalid(format!("unmerge expects diagonal tags, found {other:?}"))),
            }
        };
        let (n1, f1) = route(t.pol.0, c1)?;
        let (n2, f2) = route(t.pol.1, c2)?;
        terms.push(Term {
            coeff: t.coeff * f1 * f2,
            gaussian: t.gaussian.with_slot_centers(n1, n2),
            pol: (PolTag::H, PolTag::H),
        });
    }
    Ok(TaggedAmplitude { terms, theta_0: t0 }.simplified())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Initial,
    Flipped,
    Merged,
    Split,
    Unmerged,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Initial => "initial",
            Stage::Flipped => "flipped",
            Stage::Merged => "merged",
            Stage::Split => "split_45",
            Stage::Unmerged => "unmerged",
        }
    }
}

/// Every stage from the type-I state to the final Schmidt form.
pub fn run_stages(geom: &BeamGeometry) -> Result<Vec<(Stage, TaggedAmplitude)>> {
    let initial = initial_state(geom)?;
    let flipped = flip_polarization(&initial)?;
    let merged = merge_beams(&flipped)?;
    let split = split_45(&merged);
    let unmerged = unmerge(&split)?;
    Ok(vec![
        (Stage::Initial, initial),
        (Stage::Flipped, flipped),
        (Stage::Merged, merged),
        (Stage::Split, split),
        (Stage::Unmerged, unmerged),
    ])
}

/// Grid covering the `±θ₀` channels and the merged axis.
pub fn stage_grid(geom: &BeamGeometry, n: usize) -> Result<Grid1D> {
    geom.pipeline_grid(n)
}

/// Schmidt spectrum over the joint (angle, H/V) index of each photon: a
/// `2n × 2n` complex kernel on `grid`.
pub fn joint_spectrum(state: &TaggedAmplitude, grid: &Grid1D) -> Result<NumericSpectrum> {
    let n = grid.len();
    let nodes = grid.nodes();
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![Complex64::new(0.0, 0.0); 4 * n];
            for j in 0..n {
                let v = state.eval_hv(nodes[i], nodes[j]);
                for a in 0..2 {
                    for b in 0..2 {
                        row[a * 2 * n + 2 * j + b] = v[a][b];
                    }
                }
            }
            row
        })
        .collect();
    let m = Array2::from_shape_fn((2 * n, 2 * n), |(r, c)| {
        let (i, a) = (r / 2, r % 2);
        rows[i][a * 2 * n + c]
    });
    let w: Vec<f64> = grid.weights().iter().flat_map(|&w| [w, w]).collect();
    numeric_schmidt_complex(m.view(), &w, &w)
}

/// Quadrants named by sign pattern of `(θ₁, θ₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrant {
    /// `θ₁ > 0, θ₂ < 0`: photon 2 fixed at `−θ₀`, photon 1 scanned near `+θ₀`.
    PosNeg,
    /// `θ₁ < 0, θ₂ > 0`: photon 2 fixed at `+θ₀`, photon 1 scanned near `−θ₀`.
    NegPos,
}

impl Quadrant {
    pub fn name(self) -> &'static str {
        match self {
            Quadrant::PosNeg => "theta1_pos_theta2_neg",
            Quadrant::NegPos => "theta1_neg_theta2_pos",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthReport {
    pub quadrant: Quadrant,
    /// FWHM of `|Ψ(θ₁, θ₂ = ∓θ₀)|²` in θ₁.
    pub width_coincidence: f64,
    /// FWHM of the quadrant-restricted marginal of θ₁.
    pub width_single: f64,
    pub ratio: f64,
    /// `(a²+b²)/(2ab)` for the matched widths.
    pub k_part: f64,
    /// `|R − K_part|`.
    pub defect: f64,
}

const WIDTH_SAMPLES: usize = 4001;
const WIDTH_WINDOW: f64 = 8.0;
const MARGINAL_PANELS: usize = 64;
const MARGINAL_ORDER: usize = 16;

/// Coincidence and single-photon FWHM in one quadrant of the two-peak state.
pub fn width_ratio(geom: &BeamGeometry, quadrant: Quadrant) -> Result<WidthReport> {
    let amp = two_peak_amplitude(geom)?;
    amp.ensure_peaks_separated()?;
    let w = merged_widths(geom, WidthConvention::Matched);
    let t0 = geom.theta_0;
    let (fixed, scan_center) = match quadrant {
        Quadrant::PosNeg => (-t0, t0),
        Quadrant::NegPos => (t0, -t0),
    };
    // θ₁ spread of the marginal is √((a²+b²)/8); scan ±8 of those
    let sigma_single = ((w.a * w.a + w.b * w.b) / 8.0).sqrt();
    let half = WIDTH_WINDOW * sigma_single;
    let xs: Vec<f64> = (0..WIDTH_SAMPLES)
        .map(|k| scan_center - half + 2.0 * half * k as f64 / (WIDTH_SAMPLES - 1) as f64)
        .collect();

    let conditional: Vec<f64> = xs.iter().map(|&x| amp.value(x, fixed).powi(2)).collect();
    check_unimodal(&conditional)?;

    // θ₂ restricted to the quadrant's half-line, around the fixed channel
    let (lo, hi) = match quadrant {
        Quadrant::PosNeg => (fixed - half, (fixed + half).min(0.0)),
        Quadrant::NegPos => ((fixed - half).max(0.0), fixed + half),
    };
    let breaks: Vec<f64> = (0..=MARGINAL_PANELS)
        .map(|k| lo + (hi - lo) * k as f64 / MARGINAL_PANELS as f64)
        .collect();
    let marginal: Vec<f64> = xs
        .par_iter()
        .map(|&x| integrate_panels(&breaks, MARGINAL_ORDER, |y| amp.value(x, y).powi(2)))
        .collect();

    let width_coincidence = fwhm(&xs, &conditional)?;
    let width_single = fwhm(&xs, &marginal)?;
    let ratio = width_single / width_coincidence;
    let k_part = w.collinear_schmidt_number();
    Ok(WidthReport {
        quadrant,
        width_coincidence,
        width_single,
        ratio,
        k_part,
        defect: (ratio - k_part).abs(),
    })
}

fn check_unimodal(values: &[f64]) -> Result<()> {
    let max = values.iter().cloned().fold(0.0, f64::max);
    let floor = 1e-6 * max;
    let peaks = values
        .windows(3)
        .filter(|w| w[1] > floor && w[1] > w[0] && w[1] >= w[2])
        .count();
    if peaks != 1 {
        return Err(Error::invalid(format!("conditional slice has {peaks} local maxima, expected 1")));
    }
    Ok(())
}

/// Full width at half maximum of sampled data, the half-max crossings found
/// on a monotone cubic (Fritsch–Carlson) interpolant.
pub fn fwhm(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let (imax, &ymax) = ys
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::invalid("empty profile"))?;
    let half = 0.5 * ymax;
    let slopes = pchip_slopes(xs, ys);
    let left = (0..imax).rev().find(|&k| ys[k] <= half);
    let right = (imax + 1..ys.len()).find(|&k| ys[k] <= half);
    let (Some(l), Some(r)) = (left, right) else {
        return Err(Error::invalid("profile does not fall to half maximum inside the window"));
    };
    let xl = pchip_crossing(xs, ys, &slopes, l, half);
    let xr = pchip_crossing(xs, ys, &slopes, r - 1, half);
    Ok(xr - xl)
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    m
}

/// Root of `p(x) = level` on `[x_k, x_{k+1}]` by bisection on the Hermite cubic.
fn pchip_crossing(x: &[f64], y: &[f64], m: &[f64], k: usize, level: f64) -> f64 {
    let h = x[k + 1] - x[k];
    let p = |t: f64| {
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * y[k]
            + (t3 - 2.0 * t2 + t) * h * m[k]
            + (-2.0 * t3 + 3.0 * t2) * y[k + 1]
            + (t3 - t2) * h * m[k + 1]
    };
    let rising = y[k + 1] > y[k];
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (p(mid) < level) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    x[k] + 0.5 * (lo + hi) * h
}

/// Samples drawn per ChaCha20 block position: three 64-bit words.
const WORDS_PER_SAMPLE: u128 = 6;
const MC_CHUNK: usize = 4096;

/// `n` independent draws of `(θ₁, θ₂)` from `|Ψ|²` of a two-peak amplitude.
///
/// Each sample uses its own fixed slice of one ChaCha20 stream seeded by
/// `seed`, so the output does not depend on how the work is split across
/// threads. Per peak, `s ~ N(0, a²/2)` and `d ~ N(±2θ₀, b²/2)` (Box–Muller).
pub fn mc_sample(amplitude: &BiphotonAmplitude, n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    if amplitude.kind != AmplitudeKind::TwoPeakGauss {
        return Err(Error::invalid(format!(
            "sampling needs the two-peak Gaussian amplitude, got {}",
            amplitude.kind.name()
        )));
    }
    if n == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    amplitude.ensure_peaks_separated()?;
    let w: MergedWidths = merged_widths(&amplitude.geometry, WidthConvention::Matched);
    let (sd_s, sd_d) = (w.a * FRAC_1_SQRT_2, w.b * FRAC_1_SQRT_2);
    let u = 2.0 * amplitude.geometry.theta_0;
    let chunks: Vec<Vec<(f64, f64)>> = (0..n.div_ceil(MC_CHUNK))
        .into_par_iter()
        .map(|c| {
            let start = c * MC_CHUNK;
            let end = (start + MC_CHUNK).min(n);
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_word_pos(start as u128 * WORDS_PER_SAMPLE);
            (start..end)
                .map(|_| {
                    let u1 = 1.0 - unit(rng.next_u64());
                    let u2 = unit(rng.next_u64());
                    let pick = unit(rng.next_u64());
                    let r = (-2.0 * u1.ln()).sqrt();
                    let (sin, cos) = (2.0 * PI * u2).sin_cos();
                    let s = sd_s * r * cos;
                    let d = sd_d * r * sin + if pick < 0.5 { u } else { -u };
                    (0.5 * (s + d), 0.5 * (s - d))
                })
                .collect()
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

/// Uniform in `[0, 1)` from the top 53 bits.
fn unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
