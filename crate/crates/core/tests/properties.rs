use faer::Mat;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qillum::fock::{apply_beamsplitter, von_neumann_entropy, FockState, TruncationSpec};
use qillum::gaussian::{
    gaussian_discord, gaussian_entropy, illumination_cm, mutual_information, GaussianState, GeneralDyne,
};
use qillum::info::{fuchs_lower, fuchs_upper, holevo};
use qillum::linalg::hermitian_eigen;
use qillum::scenarios::{EncodedPair, Hypothesis, Probe, ScenarioParams};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Random density matrix `G G† / Tr` from a flat list of entries.
fn density(d: usize, raw: &[f64]) -> Mat<C64> {
    let g = Mat::<C64>::from_fn(d, d, |i, j| c(raw[2 * (i * d + j)], raw[2 * (i * d + j) + 1]));
    let m = &g * g.adjoint();
    let tr: f64 = (0..d).map(|i| m[(i, i)].re).sum();
    Mat::from_fn(d, d, |i, j| m[(i, j)] / tr)
}

fn unitary(d: usize, raw: &[f64]) -> Mat<C64> {
    let h = Mat::<C64>::from_fn(d, d, |i, j| {
        let (a, b) = (i.min(j), i.max(j));
        let z = c(raw[2 * (a * d + b)], if i == j { 0.0 } else { raw[2 * (a * d + b) + 1] });
        if i <= j {
            z
        } else {
            z.conj()
        }
    });
    hermitian_eigen(h.as_ref()).unwrap().1
}

fn state(m: &Mat<C64>) -> FockState {
    FockState::from_dense(TruncationSpec::single(m.nrows(), 0.5).unwrap(), m.as_ref()).unwrap()
}

fn rotate(g: &GaussianState, mode: usize, phi: f64) -> GaussianState {
    let (s, co) = phi.sin_cos();
    let n = 2 * g.modes();
    let r = |i: usize, j: usize| -> f64 {
        if i / 2 != mode || j / 2 != mode {
            return if i == j { 1.0 } else { 0.0 };
        }
        match (i % 2, j % 2) {
            (0, 0) | (1, 1) => co,
            (0, 1) => -s,
            _ => s,
        }
    };
    let mut cov = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                for l in 0..n {
                    acc += r(i, k) * g.cov(k, l) * r(j, l);
                }
            }
            cov[i * n + j] = acc;
        }
    }
    GaussianState::new(g.mean().to_vec(), cov).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn information_is_unitarily_invariant(
        a in prop::collection::vec(-1.0f64..1.0, 72),
        b in prop::collection::vec(-1.0f64..1.0, 72),
        u in prop::collection::vec(-1.0f64..1.0, 72),
        p0 in 0.2f64..0.8,
    ) {
        let d = 6;
        let (ra, rb) = (density(d, &a), density(d, &b));
        let w = unitary(d, &u);
        let pair = EncodedPair::from_states(state(&ra), state(&rb)).unwrap();
        let rot = EncodedPair::from_states(
            state(&(&w * &ra * w.adjoint())),
            state(&(&w * &rb * w.adjoint())),
        ).unwrap();
        let pairs = [&pair, &rot];
        let vals: Vec<[f64; 3]> = pairs.iter().map(|p| [
            holevo(p, p0).unwrap(),
            fuchs_lower(p, p0).unwrap(),
            fuchs_upper(p, p0, 21).unwrap(),
        ]).collect();
        for k in 0..3 {
            prop_assert!((vals[0][k] - vals[1][k]).abs() < 1e-8, "{k}: {:?}", vals);
        }
        prop_assert!(vals[0][1] <= vals[0][2] + 1e-8 && vals[0][2] <= vals[0][0] + 1e-8, "{:?}", vals[0]);
        prop_assert!(vals[0][1] >= 0.0);
    }

    #[test]
    fn entropy_ignores_the_correlation_sign(
        n in 0.0f64..3.0, eps in 0.0f64..0.99, ne in 0.0f64..5.0, t in 0.05f64..0.95,
    ) {
        let p = ScenarioParams::new(eps, n, ne, 0.5, Probe::Epr).unwrap();
        let g = illumination_cm(&p, Hypothesis::Present).unwrap();
        let [a, b, cc] = [g.block(0, 0), g.block(1, 1), g.block(0, 1)];
        let flipped = GaussianState::from_blocks(
            vec![0.0; 4], a, b, [[-cc[0][0], 0.0], [0.0, -cc[1][1]]],
        ).unwrap();
        let m = GeneralDyne::new(t).unwrap();
        prop_assert!((gaussian_entropy(&g).unwrap() - gaussian_entropy(&flipped).unwrap()).abs() < 1e-10);
        prop_assert!((mutual_information(&g).unwrap() - mutual_information(&flipped).unwrap()).abs() < 1e-10);
        prop_assert!((gaussian_discord(&g, &m).unwrap() - gaussian_discord(&flipped, &m).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn discord_is_nonnegative_and_phase_blind(
        n in 0.0f64..3.0, eps in 0.0f64..0.99, ne in 0.0f64..5.0, phi in -3.2f64..3.2,
    ) {
        let p = ScenarioParams::new(eps, n, ne, 0.5, Probe::Epr).unwrap();
        let g = illumination_cm(&p, Hypothesis::Present).unwrap();
        let het = GeneralDyne::heterodyne();
        let d = gaussian_discord(&g, &het).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert!(d <= mutual_information(&g).unwrap() + 1e-12);
        for mode in 0..2 {
            let r = gaussian_discord(&rotate(&g, mode, phi), &het).unwrap();
            prop_assert!((r - d).abs() < 1e-10, "{r} vs {d}");
        }
    }

    #[test]
    fn beamsplitter_conserves_photons(
        amps in prop::collection::vec(-1.0f64..1.0, 32),
        eps in 0.0f64..1.0,
    ) {
        // two single-mode pure states on |0..3⟩, embedded in d = 8 so the
        // output never reaches the cutoff
        let d = 8;
        let mk = |off: usize| -> Vec<C64> {
            let mut v: Vec<C64> = (0..d).map(|k| if k < 4 { c(amps[off + 2 * k], amps[off + 2 * k + 1]) } else { c(0.0, 0.0) }).collect();
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-3);
            v.iter_mut().for_each(|z| *z /= norm);
            v
        };
        let (va, vb) = (mk(0), mk(8));
        let single = TruncationSpec::single(d, 0.5).unwrap();
        let rho = FockState::from_pure(single.clone(), &va).unwrap()
            .tensor(&FockState::from_pure(single, &vb).unwrap()).unwrap();
        let out = apply_beamsplitter(&rho, (0, 1), eps).unwrap();
        prop_assert!((out.total_photons() - rho.total_photons()).abs() < 1e-10);
        prop_assert!((out.trace() - rho.trace()).abs() < 1e-12);
        prop_assert!((von_neumann_entropy(&out).unwrap() - von_neumann_entropy(&rho).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn partial_trace_undoes_tensor(
        a in prop::collection::vec(-1.0f64..1.0, 32),
        b in prop::collection::vec(-1.0f64..1.0, 50),
    ) {
        let (ra, rb) = (density(4, &a), density(5, &b));
        let (sa, sb) = (state(&ra), state(&rb));
        let joint = sa.tensor(&sb).unwrap();
        prop_assert!(joint.partial_trace(&[0]).unwrap().max_abs_diff(&sa).unwrap() < 1e-14);
        prop_assert!(joint.partial_trace(&[1]).unwrap().max_abs_diff(&sb).unwrap() < 1e-14);
        let s = von_neumann_entropy(&joint).unwrap();
        let parts = von_neumann_entropy(&sa).unwrap() + von_neumann_entropy(&sb).unwrap();
        prop_assert!((s - parts).abs() < 1e-9);
    }
}
