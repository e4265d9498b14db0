//! JSON run configuration (`schema: 1`). Unknown keys are errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::amplitude::{derive_widths, AmplitudeKind, BeamGeometry, CrystalOpticalParams};
use crate::error::{Error, Result};
use crate::schmidt_analytic::WidthConvention;

pub const SCHEMA_VERSION: u32 = 1;

/// Either physical crystal inputs or the derived angles directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySpec {
    Crystal(CrystalOpticalParams),
    Angles(AngleSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleSpec {
    pub delta_theta_p: f64,
    pub delta_theta_l: f64,
    pub theta_0: f64,
}

impl GeometrySpec {
    pub fn resolve(&self) -> Result<BeamGeometry> {
        match self {
            GeometrySpec::Crystal(p) => derive_widths(p),
            GeometrySpec::Angles(a) => BeamGeometry::new(a.delta_theta_p, a.delta_theta_l, a.theta_0),
        }
    }
}

/// Qutrit input: complex amplitudes as `[re, im]` pairs, or PBS counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum QutritInput {
    Amplitudes([[f64; 2]; 3]),
    Counts { n_hh: u64, n_vv: u64 },
}

/// Which kernel the SVD check decomposes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SvdCase {
    /// Collinear double Gaussian with widths `a`, `b`, sampled on `±half_width`.
    Collinear { a: f64, b: f64, half_width: f64 },
    /// The configured amplitude kind on the configured geometry, compared with
    /// the degenerate analytic spectrum.
    Noncollinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default)]
    pub geometry: Option<GeometrySpec>,
    #[serde(default)]
    pub amplitude: Option<AmplitudeKind>,
    /// Points per angular axis (runner-specific default when absent).
    #[serde(default)]
    pub grid: Option<usize>,
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub convention: Option<WidthConvention>,
    /// Also report K under the other width convention.
    #[serde(default)]
    pub compare_conventions: bool,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub qutrit: Option<QutritInput>,
    #[serde(default)]
    pub svd: Option<SvdCase>,
    /// Δθ_L/θ₀ for the super-Gaussian comparison curve.
    #[serde(default)]
    pub fig4_ratio: Option<f64>,
    #[serde(default)]
    pub mc_samples: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA_VERSION,
            geometry: None,
            amplitude: None,
            grid: None,
            n_max: None,
            convention: None,
            compare_conventions: false,
            seed: None,
            tol: None,
            qutrit: None,
            svd: None,
            fig4_ratio: None,
            mc_samples: None,
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks everything that can be checked without running a module.
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "config schema {} is not supported (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        if self.convention == Some(WidthConvention::Explicit) {
            return Err(Error::invalid("convention must be matched or paper-literal"));
        }
        if let Some(g) = self.grid {
            if g < 8 {
                return Err(Error::invalid(format!("grid must have at least 8 points, got {g}")));
            }
        }
        if let Some(t) = self.tol {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::invalid(format!("tol must be positive, got {t}")));
            }
        }
        if let Some(r) = self.fig4_ratio {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::invalid(format!("fig4_ratio must be positive, got {r}")));
            }
        }
        if self.mc_samples == Some(0) {
            return Err(Error::invalid("mc_samples must be positive"));
        }
        if let Some(SvdCase::Collinear { a, b, half_width }) = self.svd {
            if !(a > 0.0 && b > 0.0 && half_width > 0.0) {
                return Err(Error::invalid("collinear SVD case needs positive a, b, half_width"));
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<BeamGeometry> {
        self.geometry
            .unwrap_or(GeometrySpec::Crystal(CrystalOpticalParams::example()))
            .resolve()
    }

    pub fn amplitude_kind(&self) -> AmplitudeKind {
        self.amplitude.unwrap_or(AmplitudeKind::TwoPeakGauss)
    }

    pub fn convention(&self) -> WidthConvention {
        self.convention.unwrap_or_default()
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}
