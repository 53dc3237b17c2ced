use num_complex::Complex64;
use proptest::prelude::*;

use qpt::analysis::{process_fidelity, sphere_map};
use qpt::channel::{kraus_to_chi, KrausChannel};
use qpt::linalg::{ComplexMatrix, Subsystem};
use qpt::process::{aapt, operator_schmidt, sqpt, SqptInput};
use qpt::state::{states, DensityMatrix};
use qpt::tomography::{mle_reconstruct, settings_pair, simulate_counts, NoiseConfig};

fn complex_matrix(n: usize, re: &[f64], im: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| Complex64::new(re[i * n + j], im[i * n + j]))
}

/// Two Kraus operators cut from the first two columns of a 4x4
/// unitary, scaled so the channel transmits at most `t`.
fn random_channel(re: &[f64], im: &[f64], t: f64) -> KrausChannel {
    let q = complex_matrix(4, re, im).qr().q();
    let k0 = q.view((0, 0), (2, 2)).into_owned().scale(t.sqrt());
    let k1 = q.view((2, 0), (2, 2)).into_owned().scale(t.sqrt());
    KrausChannel::new(vec![k0, k1]).unwrap()
}

fn random_state(re: &[f64], im: &[f64]) -> DensityMatrix {
    let g = complex_matrix(4, re, im);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m.unscale(tr)).unwrap()
}

fn entries(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sqpt_recovers_any_channel(re in entries(16), im in entries(16), t in 0.05f64..1.0) {
        let ch = random_channel(&re, &im, t);
        let est = sqpt(&SqptInput::from_process(&ch).unwrap()).unwrap();
        let truth = kraus_to_chi(&ch);
        prop_assert!((est.chi.matrix() - truth.matrix()).norm() < 1e-9);
        prop_assert!((process_fidelity(&est.chi, &truth).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn aapt_agrees_with_sqpt_for_faithful_states(cre in entries(16), cim in entries(16), sre in entries(16), sim in entries(16)) {
        let ch = random_channel(&cre, &cim, 1.0);
        let sigma = random_state(&sre, &sim);
        let d = operator_schmidt(sigma.matrix()).unwrap();
        prop_assume!(d.min_coefficient() > 1e-3);
        let est = aapt(&sigma, &ch.apply_extended(&sigma, Subsystem::A).unwrap()).unwrap();
        let reference = sqpt(&SqptInput::from_process(&ch).unwrap()).unwrap();
        prop_assert!((est.chi.matrix() - reference.chi.matrix()).norm() < 1e-6);
    }

    #[test]
    fn operator_schmidt_reconstructs(re in entries(16), im in entries(16)) {
        let m = complex_matrix(4, &re, &im);
        let d = operator_schmidt(&m).unwrap();
        prop_assert!((d.reconstruct() - &m).norm() < 1e-10);
        prop_assert!(d.coefficients.windows(2).all(|w| w[0] >= w[1]));
        let frob: f64 = d.coefficients.iter().map(|s| s * s).sum();
        prop_assert!((frob - m.norm_squared()).abs() < 1e-9 * (1.0 + m.norm_squared()));
    }

    #[test]
    fn process_fidelity_bounded_and_symmetric(are in entries(16), aim in entries(16), bre in entries(16), bim in entries(16)) {
        let a = kraus_to_chi(&random_channel(&are, &aim, 1.0));
        let b = kraus_to_chi(&random_channel(&bre, &bim, 0.5));
        let f = process_fidelity(&a, &b).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
        prop_assert!((f - process_fidelity(&b, &a).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn sphere_map_stays_inside_the_ball(re in entries(16), im in entries(16), t in 0.05f64..1.0) {
        let mesh = sphere_map(&random_channel(&re, &im, t), 7, 8).unwrap();
        for s in &mesh.samples {
            prop_assert!(s.transmission <= 1.0 + 1e-12);
            if let Some(out) = s.output_stokes {
                prop_assert!(out.norm() <= 1.0 + 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mle_is_always_physical(re in entries(16), im in entries(16), counts in 1u64..5000, seed in any::<u64>()) {
        let rho = random_state(&re, &im);
        let records = simulate_counts(&rho, &settings_pair(), &NoiseConfig::new(counts, seed).unwrap()).unwrap();
        let est = mle_reconstruct(&records, 4).unwrap();
        prop_assert!(est.state.min_eigenvalue() > -1e-10);
        prop_assert!(est.nll <= est.start_nll + 1e-9);
    }
}

#[test]
fn werner_state_is_faithful() {
    let d = operator_schmidt(states::werner().matrix()).unwrap();
    assert!(d.min_coefficient() > 0.16);
}
