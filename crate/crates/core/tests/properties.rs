use num_complex::Complex64 as C64;
use proptest::prelude::*;

use biphoton::amplitude::BeamGeometry;
use biphoton::cli::csv::format_num;
use biphoton::pipeline::run_stages;
use biphoton::quadrature::Grid1D;
use biphoton::qutrit::{amplitude_matrix, quantifiers, rotate_basis, schmidt_qutrit, QutritState};
use biphoton::schmidt_analytic::{collinear_spectrum, mode_values, schmidt_number_series, MergedWidths};
use biphoton::schmidt_numeric::detect_degeneracy;

fn qutrit() -> impl Strategy<Value = QutritState> {
    prop::array::uniform6(-1.0f64..1.0)
        .prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
        .prop_map(|v| {
            QutritState::normalized(C64::new(v[0], v[1]), C64::new(v[2], v[3]), C64::new(v[4], v[5])).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn qutrit_decomposition_invariants(state in qutrit()) {
        let s = schmidt_qutrit(&state).unwrap();
        prop_assert!((s.lambda_plus + s.lambda_minus - 1.0).abs() < 1e-12);
        prop_assert!(s.lambda_plus >= s.lambda_minus);
        let (m, r) = (amplitude_matrix(&state), s.reconstruct());
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((m[i][j] - r[i][j]).norm() < 1e-10);
            }
        }
        let q = quantifiers(s.lambda_plus, s.lambda_minus).unwrap();
        prop_assert!((q.p * q.p + q.c * q.c - 1.0).abs() < 1e-10);
        prop_assert!((1.0 - 1e-12..=2.0 + 1e-12).contains(&q.k));
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&q.s_r));
    }
}

proptest! {
    #[test]
    fn qutrit_weights_ignore_global_phase_and_local_rotation(state in qutrit(), phi in -3.0f64..3.0, angle in -3.0f64..3.0) {
        let base = schmidt_qutrit(&state).unwrap();
        let [c1, c2, c3] = state.amplitudes();
        let z = C64::from_polar(1.0, phi);
        let phased = schmidt_qutrit(&QutritState::new(c1 * z, c2 * z, c3 * z).unwrap()).unwrap();
        let rotated = schmidt_qutrit(&rotate_basis(&state, angle)).unwrap();
        prop_assert!((phased.lambda_plus - base.lambda_plus).abs() < 1e-10);
        prop_assert!((rotated.lambda_plus - base.lambda_plus).abs() < 1e-10);
    }

    #[test]
    fn schmidt_number_is_symmetric_and_scale_free(a in 0.1f64..10.0, b in 0.1f64..10.0, t in 0.01f64..100.0) {
        let k = |a: f64, b: f64| MergedWidths::new(a, b).unwrap().collinear_schmidt_number();
        let closed = (a * a + b * b) / (2.0 * a * b);
        prop_assert!((k(a, b) / closed - 1.0).abs() < 1e-12);
        prop_assert!((k(b, a) / closed - 1.0).abs() < 1e-12);
        prop_assert!((k(t * a, t * b) / closed - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectrum_sums_to_one_and_matches_k(a in 0.2f64..5.0, b in 0.2f64..5.0) {
        let w = MergedWidths::new(a, b).unwrap();
        let q = w.ratio();
        let n = if q > 0.0 { (1e-18f64.ln() / q.ln()).ceil() as usize + 1 } else { 0 };
        let spec = collinear_spectrum(w, n);
        prop_assert!((spec.lambdas.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(spec.lambdas.windows(2).all(|p| p[0] >= p[1]));
        prop_assert!((schmidt_number_series(&spec) / w.collinear_schmidt_number() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn merged_modes_are_orthonormal(a in 0.5f64..3.0, b in 0.5f64..3.0) {
        let w = MergedWidths::new(a, b).unwrap();
        let n_max = 8;
        let grid = Grid1D::symmetric(12.0 * (a * b).sqrt(), 2001).unwrap();
        let table: Vec<Vec<f64>> = grid.nodes().iter().map(|&x| mode_values(n_max, &w, 0.0, x)).collect();
        for m in 0..=n_max {
            for n in 0..=m {
                let g = grid.integrate_indexed(|i| table[i][m] * table[i][n]);
                let expected = if m == n { 1.0 } else { 0.0 };
                prop_assert!((g - expected).abs() < 1e-9, "<{m}|{n}> = {g}");
            }
        }
    }

    #[test]
    fn paired_spectra_are_fully_paired(mut l in prop::collection::vec(1e-6f64..1.0, 1..20)) {
        let total: f64 = l.iter().sum();
        l.iter_mut().for_each(|x| *x /= 2.0 * total);
        l.sort_by(|a, b| b.total_cmp(a));
        let paired: Vec<f64> = l.iter().flat_map(|&x| [x, x]).collect();
        let r = detect_degeneracy(&paired, 1e-4);
        prop_assert!(r.unpaired.is_empty());
        prop_assert!((r.paired_mass_fraction - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_numbers_round_trip_exactly(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        let back: f64 = format_num(x).parse().unwrap();
        prop_assert_eq!(back.to_bits(), x.to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pipeline_stages_preserve_norm_and_exchange_symmetry(
        dp in 2e-4f64..2e-3,
        ratio in 0.05f64..0.2,
        t0 in 0.05f64..0.25,
    ) {
        let g = BeamGeometry::new(dp, ratio * t0, t0).unwrap();
        for (stage, state) in run_stages(&g).unwrap() {
            prop_assert!((state.norm() - 1.0).abs() < 1e-10, "{} norm {}", stage.name(), state.norm());
            prop_assert!(state.is_exchange_symmetric(1e-12), "{} not exchange symmetric", stage.name());
        }
    }
}
