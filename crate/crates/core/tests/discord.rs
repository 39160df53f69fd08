use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use qillum::discord::*;
use qillum::fock::{epr_state, project_coherent, thermal_state, FockState, TruncationSpec};
use qillum::gaussian::{gaussian_discord, illumination_cm, GeneralDyne};
use qillum::quadrature::gauss_legendre_on;
use qillum::scenarios::{collapsed_probe_distribution, EncodedPair, Hypothesis, Probe, ScenarioParams};
use qillum::truncation::converged_pair;

fn params(eps: f64, n: f64, p0: f64) -> ScenarioParams {
    ScenarioParams::new(eps, n, 4.0, p0, Probe::Epr).unwrap()
}

#[test]
fn nothing_is_consumed_without_an_object() {
    let p = params(0.0, 0.5, 0.5);
    assert!(discord_encoded_state(&p).unwrap().abs() < 1e-12);
    let r = consumed_discord(&p).unwrap();
    assert!(r.discord_mixture.abs() < 1e-9, "{r:?}");
    assert!(r.consumed.abs() < 1e-9, "{r:?}");
}

#[test]
fn report_fields_are_consistent() {
    let p = params(0.1, 0.5, 0.5);
    let r = consumed_discord(&p).unwrap();
    assert!((r.consumed - (p.p0 * r.discord_rho0 - r.discord_mixture)).abs() < 1e-10);
    assert!((r.loss - p.p1 * r.discord_rho0).abs() < 1e-15);
    assert!((r.total() - r.discord_rho0).abs() < 1e-9);
    assert!(r.discord_mixture > 0.0 && r.discord_mixture < r.discord_rho0, "{r:?}");
    assert!((r.optimal_measurement_t - 0.5).abs() < 1e-3);
    assert!(r.mixture_node_change < 1e-9);
}

#[test]
fn certain_presence_reduces_to_closed_form() {
    // p₁ = 0: the mixture is ρ⁽⁰⁾ itself, evaluated in Fock space
    let p = params(0.1, 0.5, 1.0);
    let fock = discord_mixture(&p, RADIAL_NODES).unwrap();
    let closed = discord_encoded_state(&p).unwrap();
    assert!((fock - closed).abs() < 1e-6, "{fock} vs {closed}");
}

#[test]
fn closed_form_discord_of_pure_epr_state() {
    // with no loss and no noise the heterodyne discord of a pure state is
    // the entanglement entropy
    let n = 0.5f64;
    let g = qillum::gaussian::epr_cm(n).unwrap();
    let d = gaussian_discord(&g, &GeneralDyne::heterodyne()).unwrap();
    let ent = (n + 1.0) * (n + 1.0).log2() - n * n.log2();
    assert!(d > 0.0 && d <= ent + 1e-12, "{d} vs {ent}");
}

#[test]
fn conditional_entropy_has_phase_symmetry() {
    let p = params(0.1, 0.5, 0.5);
    let pair = converged_pair(&p).unwrap().pair;
    let mix = FockState::combine(&[(0.5, &pair.rho0), (0.5, &pair.rho1)]).unwrap();
    for r in [0.3, 1.2, 2.5] {
        let (s0, d0) = conditional_entropy(&mix, C64::new(r, 0.0)).unwrap();
        for k in 1..8 {
            let beta = C64::from_polar(r, 2.0 * PI * k as f64 / 8.0);
            let (s, d) = conditional_entropy(&mix, beta).unwrap();
            assert!((s - s0).abs() < 1e-9, "r={r} k={k}: {s} vs {s0}");
            assert!((d - d0).abs() < 1e-12);
        }
    }
}

#[test]
fn posterior_weights_are_normalised() {
    let p = params(0.2, 0.5, 0.3);
    let pair = converged_pair(&p).unwrap().pair;
    for (r, phi) in [(0.0, 0.0), (0.7, 1.0), (2.0, -2.0), (4.0, 0.3)] {
        let w = conditional_weights(&pair, p.p0, C64::from_polar(r, phi)).unwrap();
        assert!((w[0] + w[1] - 1.0).abs() < 1e-14);
        assert!(w[0] > 0.0 && w[1] > 0.0);
    }
}

/// Total-variation distance between the Fock-space heterodyne outcome
/// density of an EPR state and the Gaussian law of the collapse.
#[test]
fn heterodyne_outcomes_match_collapse_law() {
    for n in [0.01, 0.5] {
        let p = params(0.1, n, 0.5);
        let law = collapsed_probe_distribution(&p).unwrap();
        let d = 12 + (60.0 * n) as usize;
        let rho = epr_state(n, &TruncationSpec::new(vec![d, d], 1e-6).unwrap()).unwrap();
        let rule = gauss_legendre_on(96, 0.0, ((n + 1.0) * 1e9f64.ln()).sqrt()).unwrap();
        let tv = 0.5
            * rule.integrate(|r| {
                let (_, fock) = project_coherent(&rho, 1, C64::new(r, 0.0), 1.0).unwrap();
                2.0 * PI * r * (fock - law.outcome_density(C64::new(r, 0.0))).abs()
            });
        assert!(tv < 1e-4, "n={n}: TV {tv}");
    }
}

#[test]
fn theorem_holds_without_object_trivially() {
    let p = params(0.0, 0.5, 0.5);
    let r = theorem1_check(&p, THEOREM1_TOL).unwrap();
    assert!(r.passed(), "{r:?}");
    assert!(r.consumed.unwrap().abs() < 1e-9);
    assert!(r.advantage.unwrap().abs() < 1e-9);
}

#[test]
fn correlated_absent_state_fails_a_condition() {
    let p = params(0.1, 0.5, 0.5);
    let pair = converged_pair(&p).unwrap().pair;
    let rho1 = FockState::combine(&[(0.9, &pair.rho1), (0.1, &pair.rho0)]).unwrap();
    let tampered = EncodedPair::from_states(pair.rho0.clone(), rho1).unwrap();
    let r = theorem1_check_pair(&p, &tampered, THEOREM1_TOL, &Theorem1Options::default()).unwrap();
    assert_eq!(r.status, Theorem1Status::ConditionFailed(2), "{r:?}");
    assert!(r.residual.is_none());
}

#[test]
fn mismatched_idler_fails_first_condition() {
    let p = params(0.1, 0.5, 0.5);
    let pair = converged_pair(&p).unwrap().pair;
    let detector = pair.rho1.partial_trace(&[0]).unwrap();
    let d_b = pair.truncation.dims()[1];
    let idler = thermal_state(0.6, &TruncationSpec::single(d_b, 1e-3).unwrap()).unwrap();
    let tampered = EncodedPair::from_states(pair.rho0.clone(), detector.tensor(&idler).unwrap()).unwrap();
    let r = theorem1_check_pair(&p, &tampered, THEOREM1_TOL, &Theorem1Options::default()).unwrap();
    assert_eq!(r.status, Theorem1Status::ConditionFailed(1));
}

#[test]
fn gaussian_sidecars_match_closed_form_discord_inputs() {
    let p = params(0.2, 0.5, 0.5);
    let pair = converged_pair(&p).unwrap().pair;
    let g0 = illumination_cm(&p, Hypothesis::Present).unwrap();
    assert!(pair.gauss0.unwrap().max_abs_diff(&g0) < 1e-15);
    let c = check_conditions(&converged_pair(&p).unwrap().pair).unwrap();
    assert!(c.shared_idler() && c.product_absent(), "{c:?}");
}

#[test]
fn discord_requires_epr_probe() {
    let p = ScenarioParams::new(0.1, 0.5, 4.0, 0.5, Probe::Coherent).unwrap();
    assert!(discord_encoded_state(&p).is_err());
    assert!(consumed_discord(&p).is_err());
    assert!(theorem1_check(&params(0.1, 0.5, 0.5), 0.0).is_err());
}
