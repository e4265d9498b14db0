//! Biphoton polarization qutrits `C₁|2_H⟩ + C₂|1_H,1_V⟩ + C₃|2_V⟩`.
//!
//! The state is handled through its symmetric 2×2 amplitude matrix
//! `Ψ(σ₁, σ₂)` over the (H, V) basis. `|1_H,1_V⟩` puts `C₂/√2` on each of the
//! two ordered slots, which keeps the matrix symmetric with unit Frobenius
//! norm. The Schmidt form of a symmetric matrix is its Takagi factorization
//! `A = Σ s_k u_k u_kᵀ`, obtained here from the real symmetric 4×4 embedding
//! `[[Re A, Im A], [Im A, −Re A]]`, whose positive eigenpairs `(s, (x; y))`
//! give `u = x + i y`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// 2×2 complex matrix indexed `[σ₁][σ₂]` with `0 = H`, `1 = V`.
pub type Mat2 = [[C64; 2]; 2];

/// Unit 2-vector over the (H, V) basis.
pub type Vec2 = [C64; 2];

const NORM_TOL: f64 = 1e-12;
const DEGENERATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QutritState {
    c: [C64; 3],
}

impl QutritState {
    /// Accepts amplitudes already normalized to within 1e-12.
    pub fn new(c1: C64, c2: C64, c3: C64) -> Result<Self> {
        let c = [c1, c2, c3];
        check_finite(&c)?;
        let norm_sq: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!(
                "qutrit amplitudes have |C₁|²+|C₂|²+|C₃|² = {norm_sq}, expected 1"
            )));
        }
        Ok(Self { c })
    }

    /// Rescales any non-zero amplitude triple to unit norm.
    pub fn normalized(c1: C64, c2: C64, c3: C64) -> Result<Self> {
        let c = [c1, c2, c3];
        check_finite(&c)?;
        let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::invalid("qutrit amplitudes are all zero"));
        }
        Ok(Self { c: c.map(|z| z / norm) })
    }

    pub fn from_real(c1: f64, c2: f64, c3: f64) -> Result<Self> {
        Self::new(C64::new(c1, 0.0), C64::new(c2, 0.0), C64::new(c3, 0.0))
    }

    pub fn amplitudes(&self) -> [C64; 3] {
        self.c
    }
}

fn check_finite(c: &[C64; 3]) -> Result<()> {
    if c.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid("qutrit amplitudes must be finite"))
    }
}

/// Schmidt form `A = e^{iγ}(√λ₊ m₊m₊ᵀ + e^{2iφ} √λ₋ m₋m₋ᵀ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QutritSchmidt {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub mode_plus: Vec2,
    pub mode_minus: Vec2,
    /// Relative phase φ between the two Schmidt terms.
    pub phase: f64,
    /// Global phase γ carried by the leading term.
    pub global_phase: f64,
    /// `λ₊ = λ₋`: the mode pair is not unique.
    pub degenerate: bool,
}

impl QutritSchmidt {
    /// Rebuilds the amplitude matrix from the decomposition.
    pub fn reconstruct(&self) -> Mat2 {
        let cp = C64::from_polar(self.lambda_plus.sqrt(), self.global_phase);
        let cm = C64::from_polar(self.lambda_minus.sqrt(), self.global_phase + 2.0 * self.phase);
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = cp * self.mode_plus[i] * self.mode_plus[j]
                    + cm * self.mode_minus[i] * self.mode_minus[j];
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QutritQuantifiers {
    /// Degree of polarization `P = λ₊ − λ₋`.
    pub p: f64,
    /// Schmidt number `K = 1/(λ₊² + λ₋²)`.
    pub k: f64,
    /// Concurrence `C = 2√(λ₊λ₋)`.
    pub c: f64,
    /// Reduced-state entropy in bits.
    pub s_r: f64,
}

/// Detector-pair click counts behind a PBS aligned with the Schmidt modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountRecord {
    pub n_hh: u64,
    pub n_vv: u64,
}

pub fn amplitude_matrix(state: &QutritState) -> Mat2 {
    let [c1, c2, c3] = state.c;
    let off = c2 * FRAC_1_SQRT_2;
    [[c1, off], [off, c3]]
}

/// One-photon reduced density matrix `ρ = A A†`.
pub fn reduce_density(state: &QutritState) -> Mat2 {
    let a = amplitude_matrix(state);
    let mut rho = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            rho[i][j] = a[i][0] * a[j][0].conj() + a[i][1] * a[j][1].conj();
        }
    }
    rho
}

pub fn schmidt_qutrit(state: &QutritState) -> Result<QutritSchmidt> {
    let a = amplitude_matrix(state);
    let (s, u) = takagi(&a)?;
    let mut lambda_plus = s[0] * s[0];
    let mut lambda_minus = s[1] * s[1];
    // λ from s² can drift from the unit trace by a few ulps
    let total = lambda_plus + lambda_minus;
    lambda_plus /= total;
    lambda_minus /= total;

    let degenerate = lambda_plus - lambda_minus < DEGENERATE_TOL;
    let (mut mode_plus, mut mode_minus) = (u[0], u[1]);
    if degenerate {
        let d45 = [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0)];
        let d135 = [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(-FRAC_1_SQRT_2, 0.0)];
        if bilinear(&d45, &a, &d135).norm() < DEGENERATE_TOL {
            mode_plus = d45;
            mode_minus = d135;
        }
    }
    fix_phase(&mut mode_plus);
    fix_phase(&mut mode_minus);

    let cp = bilinear(&mode_plus, &a, &mode_plus);
    let cm = bilinear(&mode_minus, &a, &mode_minus);
    let global_phase = cp.arg();
    let phase = if cm.norm() > 1e-15 {
        let mut diff = cm.arg() - global_phase;
        while diff > PI {
            diff -= 2.0 * PI;
        }
        while diff <= -PI {
            diff += 2.0 * PI;
        }
        0.5 * diff
    } else {
        0.0
    };

    Ok(QutritSchmidt {
        lambda_plus,
        lambda_minus,
        mode_plus,
        mode_minus,
        phase,
        global_phase,
        degenerate,
    })
}

/// `xᴴ A x̄`: coefficient of `x xᵀ` when `A` is expanded over an orthonormal
/// Takagi basis containing `x` (and `y` in the mixed form `xᴴ A ȳ`).
fn bilinear(x: &Vec2, a: &Mat2, y: &Vec2) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            acc += x[i].conj() * a[i][j] * y[j].conj();
        }
    }
    acc
}

/// Largest-magnitude component made real positive (first one on ties).
fn fix_phase(v: &mut Vec2) {
    let k = if v[1].norm() > v[0].norm() + 1e-15 { 1 } else { 0 };
    let ph = v[k].arg();
    let rot = C64::from_polar(1.0, -ph);
    for z in v.iter_mut() {
        *z *= rot;
    }
}

/// Takagi factorization of a complex symmetric 2×2 matrix: singular values
/// (descending) and the matching unit vectors with `A ū = s u`.
fn takagi(a: &Mat2) -> Result<([f64; 2], [Vec2; 2])> {
    let mut b = Array2::<f64>::zeros((4, 4));
    for i in 0..2 {
        for j in 0..2 {
            b[[i, j]] = a[i][j].re;
            b[[i, j + 2]] = a[i][j].im;
            b[[i + 2, j]] = a[i][j].im;
            b[[i + 2, j + 2]] = -a[i][j].re;
        }
    }
    crate::schmidt_numeric::single_threaded_blas();
    let (vals, vecs) = b.eigh(UPLO::Lower)?;
    // eigh returns ascending order; the two largest are +s₊, +s₋
    let mut s = [0.0; 2];
    let mut u = [[C64::new(0.0, 0.0); 2]; 2];
    for (k, col) in [3usize, 2].into_iter().enumerate() {
        s[k] = vals[col].max(0.0);
        let v = vecs.column(col);
        let mut w = [C64::new(v[0], v[2]), C64::new(v[1], v[3])];
        let n = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
        if n == 0.0 {
            return Err(Error::numerical("Takagi vector vanished"));
        }
        w[0] /= n;
        w[1] /= n;
        u[k] = w;
    }
    Ok((s, u))
}

pub fn quantifiers(lambda_plus: f64, lambda_minus: f64) -> Result<QutritQuantifiers> {
    const TOL: f64 = 1e-12;
    if !(lambda_plus.is_finite() && lambda_minus.is_finite()) {
        return Err(Error::invalid("Schmidt weights must be finite"));
    }
    if (lambda_plus + lambda_minus - 1.0).abs() > TOL {
        return Err(Error::invalid(format!(
            "λ₊ + λ₋ = {} (expected 1)",
            lambda_plus + lambda_minus
        )));
    }
    if lambda_minus < -TOL || lambda_plus < lambda_minus - TOL {
        return Err(Error::invalid(format!(
            "weights must satisfy λ₊ ≥ λ₋ ≥ 0, got ({lambda_plus}, {lambda_minus})"
        )));
    }
    let lp = lambda_plus.clamp(0.0, 1.0);
    let lm = lambda_minus.clamp(0.0, 1.0);
    let xlog = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    Ok(QutritQuantifiers {
        p: lp - lm,
        k: 1.0 / (lp * lp + lm * lm),
        c: 2.0 * (lp * lm).sqrt(),
        s_r: xlog(lp) + xlog(lm),
    })
}

/// Count-based weights. The larger count is labelled λ₊.
pub fn lambdas_from_counts(counts: CountRecord) -> Result<(f64, f64)> {
    let total = counts.n_hh + counts.n_vv;
    if total == 0 {
        return Err(Error::invalid("no detector counts recorded"));
    }
    let major = counts.n_hh.max(counts.n_vv) as f64 / total as f64;
    Ok((major, 1.0 - major))
}

/// Re-expresses the state in the basis `{|θ⟩, |θ+90°⟩}` of each photon,
/// with `|θ⟩ = cos θ |H⟩ + sin θ |V⟩`.
pub fn rotate_basis(state: &QutritState, angle: f64) -> QutritState {
    let (sn, cs) = angle.sin_cos();
    // rows: old basis (H, V); columns: new basis (θ, θ+90°)
    let m = [[cs, -sn], [sn, cs]];
    let a = amplitude_matrix(state);
    let mut r = [[C64::new(0.0, 0.0); 2]; 2];
    for mu in 0..2 {
        for nu in 0..2 {
            for s in 0..2 {
                for t in 0..2 {
                    r[mu][nu] += m[s][mu] * a[s][t] * m[t][nu];
                }
            }
        }
    }
    QutritState {
        c: [r[0][0], r[0][1] * std::f64::consts::SQRT_2, r[1][1]],
    }
}

/// Transformation to the diagonal basis `|45°⟩ = (|H⟩+|V⟩)/√2`,
/// `|135°⟩ = (−|H⟩+|V⟩)/√2`.
pub fn rotate_basis_45(state: &QutritState) -> QutritState {
    rotate_basis(state, PI / 4.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    /// Closed-form eigenvalues of a 2×2 Hermitian matrix.
    fn eig2(m: &Mat2) -> (f64, f64) {
        let p = m[0][0].re;
        let r = m[1][1].re;
        let disc = (0.25 * (p - r) * (p - r) + m[0][1].norm_sqr()).sqrt();
        (0.5 * (p + r) + disc, 0.5 * (p + r) - disc)
    }

    #[test]
    fn amplitude_matrix_examples() {
        let s = QutritState::from_real(1.0, 0.0, 0.0).unwrap();
        let a = amplitude_matrix(&s);
        assert_eq!(a, [[c(1.0), c(0.0)], [c(0.0), c(0.0)]]);

        let s = QutritState::from_real(0.0, 1.0, 0.0).unwrap();
        let a = amplitude_matrix(&s);
        assert!(close(a[0][1], c(FRAC_1_SQRT_2), 1e-16));
        assert!(close(a[1][0], c(FRAC_1_SQRT_2), 1e-16));
        assert_eq!(a[0][0], c(0.0));

        let s = QutritState::from_real(0.8, 0.0, 0.6).unwrap();
        let a = amplitude_matrix(&s);
        let frob: f64 = a.iter().flatten().map(|z| z.norm_sqr()).sum();
        assert!((frob - 1.0).abs() < 1e-12);
        assert_eq!(a[0][0], c(0.8));
        assert_eq!(a[1][1], c(0.6));
    }

    #[test]
    fn reduced_density_examples() {
        let rho = reduce_density(&QutritState::from_real(0.0, 1.0, 0.0).unwrap());
        assert!(close(rho[0][0], c(0.5), 1e-15) && close(rho[1][1], c(0.5), 1e-15));
        assert!(close(rho[0][1], c(0.0), 1e-15));

        let rho = reduce_density(&QutritState::from_real(0.8, 0.0, 0.6).unwrap());
        let (l1, l2) = eig2(&rho);
        assert!((l1 - 0.64).abs() < 1e-12 && (l2 - 0.36).abs() < 1e-12);
    }

    #[test]
    fn construction_rejects_unnormalized_or_nonfinite() {
        assert!(QutritState::from_real(1.0, 1.0, 0.0).is_err());
        assert!(QutritState::from_real(f64::NAN, 0.0, 0.0).is_err());
        assert!(QutritState::normalized(c(0.0), c(0.0), c(0.0)).is_err());
        let s = QutritState::normalized(c(3.0), c(0.0), c(4.0)).unwrap();
        assert!(close(s.amplitudes()[0], c(0.6), 1e-15));
    }

    #[test]
    fn hv_state_has_diagonal_schmidt_modes() {
        let s = QutritState::from_real(0.0, 1.0, 0.0).unwrap();
        let d = schmidt_qutrit(&s).unwrap();
        assert!(d.degenerate);
        assert!((d.lambda_plus - 0.5).abs() < 1e-12 && (d.lambda_minus - 0.5).abs() < 1e-12);
        assert!(close(d.mode_plus[0], c(FRAC_1_SQRT_2), 1e-15));
        assert!(close(d.mode_plus[1], c(FRAC_1_SQRT_2), 1e-15));
        assert!(close(d.mode_minus[0], c(FRAC_1_SQRT_2), 1e-15));
        assert!(close(d.mode_minus[1], c(-FRAC_1_SQRT_2), 1e-15));
        // e^{2iφ} = −1: the 135° mode carries the factor i
        assert!((d.phase - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_state_outside_diagonal_basis_still_reconstructs() {
        let h = FRAC_1_SQRT_2;
        let s = QutritState::from_real(h, 0.0, -h).unwrap();
        let d = schmidt_qutrit(&s).unwrap();
        assert!(d.degenerate);
        let a = amplitude_matrix(&s);
        let r = d.reconstruct();
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(a[i][j], r[i][j], 1e-12));
            }
        }
    }

    #[test]
    fn product_and_mixed_examples() {
        let d = schmidt_qutrit(&QutritState::from_real(1.0, 0.0, 0.0).unwrap()).unwrap();
        assert!((d.lambda_plus - 1.0).abs() < 1e-14 && d.lambda_minus.abs() < 1e-14);
        assert!(!d.degenerate);

        let d = schmidt_qutrit(&QutritState::from_real(0.8, 0.0, 0.6).unwrap()).unwrap();
        assert!((d.lambda_plus - 0.64).abs() < 1e-12);
        assert!((d.lambda_minus - 0.36).abs() < 1e-12);
    }

    #[test]
    fn quantifier_examples() {
        let q = quantifiers(0.5, 0.5).unwrap();
        assert_eq!((q.p, q.k, q.c, q.s_r), (0.0, 2.0, 1.0, 1.0));
        let q = quantifiers(1.0, 0.0).unwrap();
        assert_eq!((q.p, q.k, q.c, q.s_r), (1.0, 1.0, 0.0, 0.0));
        // direct arithmetic: 1/(0.64²+0.36²), −Σλ log₂λ
        let q = quantifiers(0.64, 0.36).unwrap();
        assert!((q.p - 0.28).abs() < 1e-15);
        assert!((q.k - 1.854_599_406_528_19).abs() < 1e-12);
        assert!((q.c - 0.96).abs() < 1e-15);
        assert!((q.s_r - 0.942_683_189_255_492_2).abs() < 1e-12);
    }

    #[test]
    fn quantifiers_reject_bad_weights() {
        assert!(quantifiers(0.7, 0.4).is_err());
        assert!(quantifiers(0.4, 0.6).is_err());
        assert!(quantifiers(1.1, -0.1).is_err());
        assert!(quantifiers(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn count_estimator_examples() {
        let l = lambdas_from_counts(CountRecord { n_hh: 500, n_vv: 500 }).unwrap();
        assert_eq!(l, (0.5, 0.5));
        let l = lambdas_from_counts(CountRecord { n_hh: 1000, n_vv: 0 }).unwrap();
        assert_eq!(l, (1.0, 0.0));
        let l = lambdas_from_counts(CountRecord { n_hh: 640, n_vv: 360 }).unwrap();
        assert!((l.0 - 0.64).abs() < 1e-15 && (l.1 - 0.36).abs() < 1e-15);
        let l = lambdas_from_counts(CountRecord { n_hh: 360, n_vv: 640 }).unwrap();
        assert!((l.0 - 0.64).abs() < 1e-15);
        assert!(lambdas_from_counts(CountRecord { n_hh: 0, n_vv: 0 }).is_err());
    }

    #[test]
    fn rotation_examples() {
        let h = FRAC_1_SQRT_2;
        let r = rotate_basis_45(&QutritState::from_real(0.0, 1.0, 0.0).unwrap());
        let [a, b, cc] = r.amplitudes();
        assert!(close(a, c(h), 1e-15) && close(b, c(0.0), 1e-15) && close(cc, c(-h), 1e-15));

        // two-qubit oracle: |H⟩ = (|45⟩ − |135⟩)/√2, so |2_H⟩ → (1/2, −1/√2, 1/2)
        let r = rotate_basis_45(&QutritState::from_real(1.0, 0.0, 0.0).unwrap());
        let [a, b, cc] = r.amplitudes();
        assert!(close(a, c(0.5), 1e-15) && close(b, c(-h), 1e-15) && close(cc, c(0.5), 1e-15));

        // inverse rotation maps (1/√2, 0, −1/√2) back to |1_H,1_V⟩
        let back = rotate_basis(&QutritState::from_real(h, 0.0, -h).unwrap(), -PI / 4.0);
        let [a, b, cc] = back.amplitudes();
        assert!(close(a, c(0.0), 1e-15) && (b.norm() - 1.0).abs() < 1e-15);
        assert!(close(cc, c(0.0), 1e-15));
    }

    #[test]
    fn double_rotation_swaps_h_and_v() {
        let s =
            QutritState::normalized(C64::new(0.3, 0.1), C64::new(-0.2, 0.5), C64::new(0.4, -0.2))
                .unwrap();
        let twice = rotate_basis_45(&rotate_basis_45(&s));
        let [c1, c2, c3] = s.amplitudes();
        let [d1, d2, d3] = twice.amplitudes();
        assert!(close(d1, c3, 1e-14));
        assert!(close(d2, -c2, 1e-14));
        assert!(close(d3, c1, 1e-14));
    }
}
