//! Numerical Schmidt decomposition of sampled amplitudes (Nyström SVD).
//!
//! With quadrature weights `w`, the matrix `Mᵢⱼ = √w₁ᵢ Ψᵢⱼ √w₂ⱼ` has singular
//! values that converge to the Schmidt coefficients of the continuous kernel,
//! and its singular vectors divided by `√w` to the Schmidt modes.

use std::sync::Once;

use ndarray::{Array2, ArrayView2};
use ndarray_linalg::{JobSvd, SVDDC};
use num_complex::Complex64;

use crate::amplitude::{evaluate_on_grid_with_tolerance, BiphotonAmplitude, SampledAmplitude};
use crate::error::{Error, Result};
use crate::quadrature::{compensated_sum, Grid1D};
use crate::schmidt_analytic::{mode_values, schmidt_number, SchmidtSpectrum};

pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-4;
/// Boundary magnitude (relative to the maximum) that triggers window widening.
pub const BOUNDARY_RATIO_LIMIT: f64 = 1e-7;
pub const WINDOW_GROWTH: f64 = 1.25;
pub const MAX_WINDOW_RETRIES: usize = 3;
/// Number of leading modes checked for overlap in [`compare_with_modes`].
pub const OVERLAP_CHECK_MODES: usize = 10;

extern "C" {
    fn openblas_set_num_threads(n: i32);
}

static BLAS_INIT: Once = Once::new();

/// Pins OpenBLAS to one thread so factorizations are bit-stable regardless of
/// machine size; parallelism lives in rayon at a coarser level.
pub(crate) fn single_threaded_blas() {
    BLAS_INIT.call_once(|| unsafe { openblas_set_num_threads(1) });
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericSpectrum {
    /// `σₖ²/Σσ²`, descending.
    pub lambdas: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    /// `|Σσ² − 1|`: discrete norm defect of the input.
    pub residual: f64,
}

impl NumericSpectrum {
    /// `1/Σλₖ²`.
    pub fn schmidt_number(&self) -> f64 {
        1.0 / compensated_sum(self.lambdas.iter().map(|l| l * l))
    }
}

/// Discrete Schmidt modes with unit quadrature norm, `left[k][i] = uₖ(θ₁ᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericModes {
    pub left: Vec<Vec<f64>>,
    pub right: Vec<Vec<f64>>,
}

fn check_inputs(shape: (usize, usize), w1: &[f64], w2: &[f64], finite: bool) -> Result<()> {
    if !finite {
        return Err(Error::invalid("sampled amplitude contains non-finite values"));
    }
    if shape.0 != w1.len() || shape.1 != w2.len() || shape.0 == 0 || shape.1 == 0 {
        return Err(Error::invalid("amplitude matrix does not match its grids"));
    }
    Ok(())
}

fn weighted(values: ArrayView2<f64>, w1: &[f64], w2: &[f64]) -> Array2<f64> {
    let s1: Vec<f64> = w1.iter().map(|w| w.sqrt()).collect();
    let s2: Vec<f64> = w2.iter().map(|w| w.sqrt()).collect();
    Array2::from_shape_fn(values.dim(), |(i, j)| s1[i] * values[[i, j]] * s2[j])
}

fn spectrum_from_sigma(sigma: &[f64], rows: usize, cols: usize) -> Result<NumericSpectrum> {
    let total = compensated_sum(sigma.iter().map(|s| s * s));
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::numerical("amplitude has zero discrete norm"));
    }
    let mut lambdas: Vec<f64> = sigma.iter().map(|s| s * s / total).collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok(NumericSpectrum { lambdas, rows, cols, residual: (total - 1.0).abs() })
}

pub fn numeric_schmidt(sampled: &SampledAmplitude) -> Result<NumericSpectrum> {
    numeric_schmidt_real(sampled.values.view(), sampled.grid1.weights(), sampled.grid2.weights())
}

/// Spectrum of a real kernel sampled on grids with weights `w1`, `w2`.
pub fn numeric_schmidt_real(values: ArrayView2<f64>, w1: &[f64], w2: &[f64]) -> Result<NumericSpectrum> {
    check_inputs(values.dim(), w1, w2, values.iter().all(|v| v.is_finite()))?;
    single_threaded_blas();
    let m = weighted(values, w1, w2);
    let (_, sigma, _) = m.svddc(JobSvd::None)?;
    spectrum_from_sigma(sigma.as_slice().expect("contiguous"), values.nrows(), values.ncols())
}

/// Spectrum of a complex kernel, e.g. a joint angle × polarization amplitude.
pub fn numeric_schmidt_complex(
    values: ArrayView2<Complex64>,
    w1: &[f64],
    w2: &[f64],
) -> Result<NumericSpectrum> {
    check_inputs(values.dim(), w1, w2, values.iter().all(|v| v.re.is_finite() && v.im.is_finite()))?;
    single_threaded_blas();
    let s1: Vec<f64> = w1.iter().map(|w| w.sqrt()).collect();
    let s2: Vec<f64> = w2.iter().map(|w| w.sqrt()).collect();
    let m = Array2::from_shape_fn(values.dim(), |(i, j)| values[[i, j]] * (s1[i] * s2[j]));
    let (_, sigma, _) = m.svddc(JobSvd::None)?;
    spectrum_from_sigma(sigma.as_slice().expect("contiguous"), values.nrows(), values.ncols())
}

/// Spectrum plus the leading `n_modes` discrete Schmidt modes.
pub fn numeric_schmidt_with_modes(
    sampled: &SampledAmplitude,
    n_modes: usize,
) -> Result<(NumericSpectrum, NumericModes)> {
    let (w1, w2) = (sampled.grid1.weights(), sampled.grid2.weights());
    let values = sampled.values.view();
    check_inputs(values.dim(), w1, w2, values.iter().all(|v| v.is_finite()))?;
    single_threaded_blas();
    let m = weighted(values, w1, w2);
    let (u, sigma, vt) = m.svddc(JobSvd::Some)?;
    let (u, vt) = (u.expect("requested U"), vt.expect("requested Vᵀ"));
    let spectrum = spectrum_from_sigma(sigma.as_slice().expect("contiguous"), values.nrows(), values.ncols())?;
    let k = n_modes.min(sigma.len());
    let left = (0..k)
        .map(|c| (0..u.nrows()).map(|i| u[[i, c]] / w1[i].sqrt()).collect())
        .collect();
    let right = (0..k)
        .map(|r| (0..vt.ncols()).map(|j| vt[[r, j]] / w2[j].sqrt()).collect())
        .collect();
    Ok((spectrum, NumericModes { left, right }))
}

/// Samples `amp` on the default uniform window, widening it by 25% (up to
/// three times) while the boundary still carries more than 1e-7 of the peak.
/// The final window must leave at most `tail_tolerance` of the mass outside.
pub fn sample_default_window(amp: &BiphotonAmplitude, n: usize, tail_tolerance: f64) -> Result<SampledAmplitude> {
    let mut half = amp.geometry.default_half_width();
    for attempt in 0..=MAX_WINDOW_RETRIES {
        let grid = Grid1D::symmetric(half, n)?;
        let a = *amp;
        let probe = SampledAmplitude::from_fn(grid.clone(), grid.clone(), move |x, y| a.value(x, y));
        if probe.boundary_ratio() <= BOUNDARY_RATIO_LIMIT || attempt == MAX_WINDOW_RETRIES {
            return evaluate_on_grid_with_tolerance(amp, &grid, &grid, tail_tolerance);
        }
        half *= WINDOW_GROWTH;
    }
    unreachable!("loop returns on its last attempt")
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyReport {
    /// Index pairs of adjacent values equal within the relative tolerance.
    pub pairs: Vec<(usize, usize)>,
    pub unpaired: Vec<usize>,
    /// Share of the total weight carried by paired values.
    pub paired_mass_fraction: f64,
}

/// Greedy adjacent pairing of a descending spectrum.
pub fn detect_degeneracy(lambdas: &[f64], rel_tol: f64) -> DegeneracyReport {
    let mut pairs = Vec::new();
    let mut unpaired = Vec::new();
    let mut i = 0;
    while i < lambdas.len() {
        let a = lambdas[i];
        if a > 0.0 && i + 1 < lambdas.len() && (a - lambdas[i + 1]).abs() <= rel_tol * a {
            pairs.push((i, i + 1));
            i += 2;
        } else {
            if a > 0.0 {
                unpaired.push(i);
            }
            i += 1;
        }
    }
    let total = compensated_sum(lambdas.iter().copied());
    let paired = compensated_sum(pairs.iter().flat_map(|&(a, b)| [lambdas[a], lambdas[b]]));
    DegeneracyReport {
        pairs,
        unpaired,
        paired_mass_fraction: if total > 0.0 { paired / total } else { 0.0 },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeError {
    pub k: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub abs_err: f64,
    /// `abs_err / analytic`, or `abs_err` itself where the analytic weight is 0.
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub modes: Vec<ModeError>,
    pub k_analytic: f64,
    pub k_numeric: f64,
    /// Largest `1 − overlap` between analytic and numeric modes (0 when modes
    /// were not compared).
    pub max_overlap_defect: f64,
    /// Analytic weight beyond the compared range.
    pub analytic_tail: f64,
    /// Numeric weight beyond the compared range.
    pub numeric_tail: f64,
    pub tol: f64,
    pub pass: bool,
}

impl ComparisonReport {
    pub fn max_abs_err(&self) -> f64 {
        self.modes.iter().map(|m| m.abs_err).fold(0.0, f64::max)
    }

    pub fn k_rel_err(&self) -> f64 {
        ((self.k_numeric - self.k_analytic) / self.k_analytic).abs()
    }
}

/// Aligns the reduced-state eigenvalues (pairs for a degenerate spectrum)
/// index by index. Passes iff every weight differs by less than `tol` and the
/// unmatched tails both stay below `tol`.
pub fn compare(analytic: &SchmidtSpectrum, numeric: &NumericSpectrum, tol: f64) -> ComparisonReport {
    let weights = analytic.weights();
    let n = weights.len().min(numeric.lambdas.len());
    let modes: Vec<ModeError> = (0..n)
        .map(|k| {
            let (a, v) = (weights[k], numeric.lambdas[k]);
            let abs_err = (a - v).abs();
            ModeError { k, analytic: a, numeric: v, abs_err, rel_err: if a > 0.0 { abs_err / a } else { abs_err } }
        })
        .collect();
    let analytic_tail = analytic.tail_mass() + compensated_sum(weights[n..].iter().copied());
    let numeric_tail = compensated_sum(numeric.lambdas[n..].iter().copied());
    let finite = modes.iter().all(|m| m.abs_err.is_finite());
    let pass = finite
        && modes.iter().all(|m| m.abs_err < tol)
        && analytic_tail < tol
        && numeric_tail < tol;
    ComparisonReport {
        modes,
        k_analytic: schmidt_number(analytic),
        k_numeric: numeric.schmidt_number(),
        max_overlap_defect: 0.0,
        analytic_tail,
        numeric_tail,
        tol,
        pass,
    }
}

/// [`compare`] plus a mode check on `grid` (the grid the left modes live on).
///
/// Each analytic mode family is centred at one of `centers`: one center for a
/// collinear spectrum, `±θ₀` for a degenerate one. The overlap of analytic
/// mode `n` (or of the pair spanned by its two families) with the matching
/// numeric singular vector(s) is measured as the captured squared projection.
pub fn compare_with_modes(
    analytic: &SchmidtSpectrum,
    numeric: &NumericSpectrum,
    modes: &NumericModes,
    grid: &Grid1D,
    centers: &[f64],
    tol: f64,
) -> Result<ComparisonReport> {
    let widths = analytic
        .widths
        .ok_or_else(|| Error::invalid("mode comparison needs an analytic double-Gaussian spectrum"))?;
    let family = if analytic.degenerate { 2 } else { 1 };
    if centers.len() != family {
        return Err(Error::invalid(format!("expected {family} mode center(s), got {}", centers.len())));
    }
    if modes.left.iter().any(|m| m.len() != grid.len()) {
        return Err(Error::invalid("numeric modes do not live on the given grid"));
    }
    let mut report = compare(analytic, numeric, tol);
    let n_check = OVERLAP_CHECK_MODES
        .min(analytic.n_max + 1)
        .min(modes.left.len() / family);
    let n_top = n_check.saturating_sub(1);
    let tables: Vec<Vec<Vec<f64>>> = centers
        .iter()
        .map(|&c| grid.nodes().iter().map(|&x| mode_values(n_top, &widths, c, x)).collect())
        .collect();
    let mut worst = 0.0f64;
    for n in 0..n_check {
        let mut captured = 0.0;
        for table in &tables {
            for k in n * family..(n + 1) * family {
                let ip = grid.integrate_indexed(|i| table[i][n] * modes.left[k][i]);
                captured += ip * ip;
            }
        }
        // skip nearly-zero modes whose singular vectors are not determined
        if analytic.lambdas[n] > 1e-8 {
            worst = worst.max((1.0 - captured / family as f64).abs());
        }
    }
    report.max_overlap_defect = worst;
    report.pass = report.pass && worst < tol.max(1e-6).sqrt();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitude::{derive_widths, two_peak_amplitude, CrystalOpticalParams};
    use crate::schmidt_analytic::{collinear_spectrum, default_n_max, noncollinear_decomposition, MergedWidths, WidthConvention};

    fn collinear_sample(a: f64, b: f64, half: f64, n: usize) -> SampledAmplitude {
        let w = MergedWidths::new(a, b).unwrap();
        let g = Grid1D::symmetric(half, n).unwrap();
        SampledAmplitude::from_fn(g.clone(), g, move |x, y| w.kernel(x, y))
    }

    #[test]
    fn product_state_is_rank_one() {
        let g = Grid1D::symmetric(6.0, 200).unwrap();
        let psi = |x: f64| (-x * x / 2.0).exp() * std::f64::consts::PI.powf(-0.25);
        let s = SampledAmplitude::from_fn(g.clone(), g, move |x, y| psi(x) * psi(y - 0.3));
        let spec = numeric_schmidt(&s).unwrap();
        assert!((spec.lambdas[0] - 1.0).abs() < 1e-10);
        assert!(spec.lambdas[1..].iter().all(|l| *l < 1e-10));
        let d = detect_degeneracy(&spec.lambdas, DEFAULT_DEGENERACY_TOL);
        assert_eq!(d.unpaired[0], 0);
        assert!(d.paired_mass_fraction < 1e-9);
    }

    #[test]
    fn collinear_three_to_one() {
        let s = collinear_sample(3.0, 1.0, 15.0, 128);
        let spec = numeric_schmidt(&s).unwrap();
        assert!((spec.lambdas[0] - 0.75).abs() < 1e-6);
        assert!((spec.lambdas[1] - 0.1875).abs() < 1e-6);
        assert!(spec.residual < 1e-10);
        assert!(spec.lambdas.iter().all(|l| *l >= 0.0));
        let d = detect_degeneracy(&spec.lambdas, DEFAULT_DEGENERACY_TOL);
        assert!(d.paired_mass_fraction < 1e-6);
    }

    #[test]
    fn coarse_grid_fails_comparison() {
        let w = MergedWidths::new(3.0, 1.0).unwrap();
        let analytic = collinear_spectrum(w, 10);
        let coarse = numeric_schmidt(&collinear_sample(3.0, 1.0, 15.0, 32)).unwrap();
        let report = compare(&analytic, &coarse, 1e-6);
        assert!(!report.pass);
        assert!(report.max_abs_err() > 1e-6);
        let fine = numeric_schmidt(&collinear_sample(3.0, 1.0, 15.0, 64)).unwrap();
        assert!(compare(&analytic, &fine, 1e-6).pass);
    }

    #[test]
    fn spectrum_against_itself_has_zero_error() {
        let w = MergedWidths::new(2.0, 0.5).unwrap();
        let analytic = collinear_spectrum(w, 40);
        let numeric = NumericSpectrum { lambdas: analytic.lambdas.clone(), rows: 0, cols: 0, residual: 0.0 };
        let r = compare(&analytic, &numeric, 1e-12);
        assert_eq!(r.max_abs_err(), 0.0);
        assert!(r.pass);
    }

    #[test]
    fn length_mismatch_is_tail_accounted() {
        let w = MergedWidths::new(3.0, 1.0).unwrap();
        let analytic = collinear_spectrum(w, 3);
        let numeric = NumericSpectrum { lambdas: vec![0.75, 0.1875], rows: 0, cols: 0, residual: 0.0 };
        let r = compare(&analytic, &numeric, 1e-6);
        assert_eq!(r.modes.len(), 2);
        assert!((r.analytic_tail - 0.0625).abs() < 1e-15);
        assert!(!r.pass);
    }

    #[test]
    fn pairing_of_degenerate_ladder() {
        let l = [0.375, 0.375, 0.09375, 0.09375, 0.0234375, 0.0234375];
        let d = detect_degeneracy(&l, DEFAULT_DEGENERACY_TOL);
        assert_eq!(d.pairs, vec![(0, 1), (2, 3), (4, 5)]);
        assert_eq!(d.paired_mass_fraction, 1.0);
        let d = detect_degeneracy(&[1.0, 0.0, 0.0], DEFAULT_DEGENERACY_TOL);
        assert_eq!(d.unpaired, vec![0]);
        assert_eq!(d.paired_mass_fraction, 0.0);
    }

    #[test]
    fn two_peak_spectrum_is_paired_and_matches_analytic() {
        let g = derive_widths(&CrystalOpticalParams::example()).unwrap();
        let amp = two_peak_amplitude(&g).unwrap();
        let s = sample_default_window(&amp, 1024, crate::amplitude::DEFAULT_TAIL_TOLERANCE).unwrap();
        let (spec, modes) = numeric_schmidt_with_modes(&s, 12).unwrap();
        let d = detect_degeneracy(&spec.lambdas, DEFAULT_DEGENERACY_TOL);
        assert!(d.paired_mass_fraction > 0.999);
        let dec = noncollinear_decomposition(&g, WidthConvention::Matched, None).unwrap();
        let r = compare_with_modes(&dec.spectrum, &spec, &modes, &s.grid1, &[g.theta_0, -g.theta_0], 1e-5)
            .unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.k_rel_err() < 1e-3);
    }

    #[test]
    fn collinear_modes_match_hermite_gaussians() {
        let s = collinear_sample(3.0, 1.0, 15.0, 256);
        let (spec, modes) = numeric_schmidt_with_modes(&s, 10).unwrap();
        let w = MergedWidths::new(3.0, 1.0).unwrap();
        let analytic = collinear_spectrum(w, default_n_max(&w));
        let r = compare_with_modes(&analytic, &spec, &modes, &s.grid1, &[0.0], 1e-6).unwrap();
        assert!(r.max_overlap_defect < 1e-8, "{}", r.max_overlap_defect);
        // unit quadrature norm
        let n = s.grid1.integrate_indexed(|i| modes.left[3][i] * modes.left[3][i]);
        assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complex_path_agrees_with_real_path() {
        let s = collinear_sample(2.0, 0.7, 10.0, 96);
        let c = s.values.mapv(|v| Complex64::new(0.6 * v, 0.8 * v));
        let real = numeric_schmidt(&s).unwrap();
        let cplx = numeric_schmidt_complex(c.view(), s.grid1.weights(), s.grid2.weights()).unwrap();
        for k in 0..10 {
            assert!((real.lambdas[k] - cplx.lambdas[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let g = Grid1D::symmetric(1.0, 4).unwrap();
        let mut s = SampledAmplitude::from_fn(g.clone(), g.clone(), |_, _| 0.0);
        assert!(matches!(numeric_schmidt(&s), Err(Error::Numerical(_))));
        s.values[[1, 2]] = f64::NAN;
        assert!(matches!(numeric_schmidt(&s), Err(Error::InvalidInput(_))));
    }
}
