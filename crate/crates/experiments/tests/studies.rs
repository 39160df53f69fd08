use qillum::info::fuchs_lower;
use qillum::scenarios::{build_pair_with, PairDims, Probe, ScenarioParams};
use qillum_experiments::cache::Cache;
use qillum_experiments::perturb::{run_perturbation_study, PerturbationStudySpec};
use qillum_experiments::studies::{open_t_grid, run_generaldyne_scan, run_squeezed_scan, second_differences};
use qillum_experiments::sweep::{run_sweep, Axis, DimsMode, EvalOptions, Quantity, SweepSpec};
use qillum_experiments::ExpError;

fn params(eps: f64, n: f64, probe: Probe) -> ScenarioParams {
    ScenarioParams::new(eps, n, 4.0, 0.5, probe).unwrap()
}

#[test]
fn zero_perturbation_reproduces_the_coherent_probe() {
    let spec = PerturbationStudySpec {
        samples: 7,
        eta: 0.0,
        seed: 1,
        keep_fraction: 0.5,
    };
    let st = run_perturbation_study(&spec, &params(0.5, 0.5, Probe::Coherent)).unwrap();
    assert_eq!(st.kept, 4);
    assert_eq!(st.counts.iter().sum::<usize>(), st.kept);
    assert_eq!(st.rejected, 0);
    for v in &st.values {
        assert!((v - st.reference).abs() <= 1e-12 * st.reference, "{v} vs {}", st.reference);
    }
    assert_eq!(st.fraction_above, 0.0);
}

#[test]
fn perturbation_study_rejects_bad_specs() {
    let p = params(0.5, 0.5, Probe::Coherent);
    let base = PerturbationStudySpec {
        samples: 4,
        eta: 1e-2,
        seed: 1,
        keep_fraction: 0.5,
    };
    for spec in [
        PerturbationStudySpec { samples: 0, ..base.clone() },
        PerturbationStudySpec { eta: -1.0, ..base.clone() },
        PerturbationStudySpec { keep_fraction: 1.5, ..base.clone() },
    ] {
        assert!(matches!(run_perturbation_study(&spec, &p), Err(ExpError::Config(_))));
    }
    assert!(run_perturbation_study(&base, &params(0.5, 0.5, Probe::Epr)).is_err());
}

#[test]
fn unsqueezed_end_of_the_scan_is_the_coherent_probe() {
    let p = params(0.1, 0.5, Probe::Coherent);
    let dims = PairDims::initial(&p);
    let opts = EvalOptions {
        dims: DimsMode::Fixed(dims),
        nodes: None,
    };
    let (res, s) = run_squeezed_scan(&p, &[0.0, 0.004], &opts).unwrap();
    let coherent = fuchs_lower(&build_pair_with(&p, &dims).unwrap(), 0.5).unwrap();
    assert!((s.a_s_coherent - coherent).abs() <= 1e-10 * coherent);
    assert!(s.a_s_star >= s.a_s_coherent);
    assert_eq!(res.rows.len(), 2);

    // sinh²r may not exceed the probe energy
    let too_much = 0.5f64.sqrt().asinh() + 0.01;
    assert!(matches!(run_squeezed_scan(&p, &[0.0, too_much], &opts), Err(ExpError::Config(_))));
}

#[test]
fn generaldyne_domain_is_open() {
    let p = params(0.1, 0.5, Probe::Epr);
    for grid in [vec![0.0, 0.5], vec![0.5, 1.0]] {
        assert!(run_generaldyne_scan(&p, &grid, &EvalOptions::default(), &Cache::disabled()).is_err());
    }
    let g = open_t_grid(19);
    assert_eq!(g.len(), 19);
    assert!((g[9] - 0.5).abs() < 1e-15 && (g[0] - 0.05).abs() < 1e-15);
}

#[test]
fn second_differences_detect_curvature() {
    let x: Vec<f64> = (0..6).map(|k| k as f64 * 0.2).collect();
    let f: Vec<f64> = x.iter().map(|v| -v * v).collect();
    for d in second_differences(&x, &f) {
        assert!((d + 2.0 * 0.04).abs() < 1e-12);
    }
}

/// Along the energy axis the consumed discord tracks the quantum advantage.
#[test]
fn consumed_discord_follows_the_advantage_in_energy() {
    let spec = SweepSpec {
        axis: Axis::NbarProbe,
        grid: vec![0.05, 0.1],
        fixed: params(0.1, 0.1, Probe::Epr),
        quantities: vec![Quantity::ChiQ, Quantity::ChiC, Quantity::DeltaCon],
    };
    let res = run_sweep(&spec, &EvalOptions::default(), &Cache::disabled()).unwrap();
    let (q, c, d) = (
        res.column("chi_q").unwrap(),
        res.column("chi_c").unwrap(),
        res.column("delta_con").unwrap(),
    );
    for k in 0..2 {
        assert!((d[k] - (q[k] - c[k])).abs() <= 5e-4, "n̄={}: {} vs {}", spec.grid[k], d[k], q[k] - c[k]);
    }
    assert!(d[1] > d[0]);
}
