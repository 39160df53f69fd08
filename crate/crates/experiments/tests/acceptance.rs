//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! fails. Runs as a plain binary (no libtest harness) so the report is
//! always printed; expect around half an hour on one core.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64 as C64;
use qillum::discord::{theorem1_check, Theorem1Status, THEOREM1_TOL};
use qillum::fock::{epr_state, project_coherent, von_neumann_entropy, FockState, TruncationSpec};
use qillum::gaussian::gaussian_entropy;
use qillum::info::{fuchs_lower, fuchs_upper, holevo};
use qillum::quadrature::gauss_legendre_on;
use qillum::scenarios::{collapsed_probe_distribution, EncodedPair, Probe, ScenarioParams};
use qillum::truncation::converged_pair;
use qillum_experiments::cache::Cache;
use qillum_experiments::perturb::{run_perturbation_study, PerturbationStudySpec};
use qillum_experiments::studies::{
    open_t_grid, run_concavity_check, run_generaldyne_scan, run_squeezed_scan, CONCAVITY_EPSILONS,
};
use qillum_experiments::sweep::{run_sweep, Axis, EvalOptions, Quantity, SweepResult, SweepSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NENV: f64 = 4.0;

fn params(eps: f64, n: f64, probe: Probe) -> ScenarioParams {
    ScenarioParams::new(eps, n, NENV, 0.5, probe).unwrap()
}

/// ε ∈ {0.02, 0.04, …, 0.30}.
fn eps_grid() -> Vec<f64> {
    (1..=15).map(|k| 0.02 * k as f64).collect()
}

struct Report {
    failed: Vec<u32>,
    start: Instant,
}

impl Report {
    fn line(&mut self, id: u32, pass: bool, detail: String) {
        if !pass {
            self.failed.push(id);
        }
        println!(
            "criterion {id:>2}  {}  {detail}  [{:.0} s]",
            if pass { "PASS" } else { "FAIL" },
            self.start.elapsed().as_secs_f64()
        );
    }
}

struct Fig2 {
    nbar: f64,
    res: SweepResult,
}

impl Fig2 {
    fn col(&self, name: &str) -> Vec<f64> {
        self.res.column(name).unwrap()
    }
}

fn fig2_sweeps() -> Vec<Fig2> {
    [0.5, 0.01]
        .into_iter()
        .map(|nbar| {
            let spec = SweepSpec {
                axis: Axis::Epsilon,
                grid: eps_grid(),
                fixed: params(0.1, nbar, Probe::Epr),
                quantities: vec![Quantity::ChiQ, Quantity::ChiS, Quantity::ChiC, Quantity::AQBounds, Quantity::ASBounds],
            };
            let res = run_sweep(&spec, &EvalOptions::default(), &Cache::disabled()).unwrap();
            for r in &res.rows {
                assert!(r.ok(), "n̄={nbar} ε={}: {}", r.axis_value, r.flags);
            }
            Fig2 { nbar, res }
        })
        .collect()
}

fn criterion_1(rep: &mut Report, figs: &[Fig2]) {
    let mut worst_chi = f64::INFINITY;
    let mut worst_a = f64::INFINITY;
    let mut count = 0;
    for f in figs {
        let (q, s) = (f.col("chi_q"), f.col("chi_s"));
        let (ql, su) = (f.col("A_q_lower"), f.col("A_s_upper"));
        for k in 0..q.len() {
            worst_chi = worst_chi.min(q[k] - s[k]);
            worst_a = worst_a.min(ql[k] - su[k]);
            count += 1;
        }
    }
    rep.line(
        1,
        worst_chi > 0.0 && worst_a > 0.0,
        format!("chi_q > chi_s and A_q_lower > A_s_upper at {count} points; smallest margins {worst_chi:.3e}, {worst_a:.3e} bits"),
    );
}

fn criterion_2(rep: &mut Report, figs: &[Fig2]) {
    let mut worst: f64 = 0.0;
    for f in figs {
        for (l, u) in f.col("A_q_lower").iter().zip(f.col("A_q_upper")) {
            worst = worst.max((u - l) / l);
        }
    }
    rep.line(2, worst <= 0.01, format!("largest A_q bound gap {:.3}% (limit 1%)", 100.0 * worst));
}

fn criterion_3(rep: &mut Report, figs: &[Fig2]) {
    // six significant figures: the bounds differ by less than half a unit
    // in the sixth digit
    let mut worst_sig: f64 = 0.0;
    for f in figs {
        for (l, u) in f.col("A_s_lower").iter().zip(f.col("A_s_upper")) {
            worst_sig = worst_sig.max((u - l).abs() / l);
        }
    }
    let a = figs.iter().find(|f| f.nbar == 0.5).unwrap();
    let (chi, al) = (a.col("chi_s"), a.col("A_s_lower"));
    let gaps: Vec<f64> = chi.iter().zip(&al).map(|(c, l)| (c - l) / c).collect();
    let (lo, hi) = gaps.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &g| (a.min(g), b.max(g)));
    let pass = worst_sig < 5e-6 && lo >= 0.002 && hi <= 0.006;
    rep.line(
        3,
        pass,
        format!(
            "A_s bounds agree to {worst_sig:.2e} relative (limit 5e-6); (chi_s - A_s)/chi_s in [{:.3}%, {:.3}%] at n̄=0.5 (target 0.4 ± 0.2%)",
            100.0 * lo,
            100.0 * hi
        ),
    );
}

fn criterion_4(rep: &mut Report) {
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for nbar in [0.01, 0.5] {
        for eps in [0.05, 0.1, 0.2, 0.3] {
            let r = theorem1_check(&params(eps, nbar, Probe::Epr), THEOREM1_TOL).unwrap();
            if let Some(res) = r.residual {
                worst = worst.max(res);
            }
            if r.status != Theorem1Status::Pass {
                bad.push(format!("(ε={eps}, n̄={nbar}: {:?})", r.status));
            }
        }
    }
    rep.line(
        4,
        bad.is_empty(),
        format!("conditions hold and |δ_con - (chi_q - chi_c)| <= {worst:.2e} at 8 points (limit {THEOREM1_TOL:e}) {}", bad.join(" ")),
    );
}

fn criterion_5(rep: &mut Report, figs: &[Fig2]) {
    let mut pass = true;
    let mut detail = Vec::new();
    for f in figs {
        let (q, s, c) = (f.col("chi_q"), f.col("chi_s"), f.col("chi_c"));
        // relative difference between the two advantages
        let rel: Vec<f64> = (0..q.len()).map(|k| ((q[k] - c[k]) - (q[k] - s[k])).abs() / (q[k] - c[k])).collect();
        let last = *rel.last().unwrap();
        let (target, tol) = if f.nbar == 0.5 { (0.013, 0.005) } else { (0.00005, 0.0001) };
        let monotone = rel.windows(2).all(|w| w[0] < w[1]);
        pass &= (last - target).abs() <= tol && monotone;
        detail.push(format!(
            "n̄={}: {:.4}% at ε=0.3 (target {}% ± {}pp), monotone in ε: {monotone}",
            f.nbar,
            100.0 * last,
            100.0 * target,
            100.0 * tol
        ));
    }
    rep.line(5, pass, detail.join("; "));
}

fn criterion_6(rep: &mut Report) {
    let grid = open_t_grid(19);
    let (_, s) = run_generaldyne_scan(&params(0.1, 0.5, Probe::Epr), &grid, &EvalOptions::default(), &Cache::disabled()).unwrap();
    rep.line(
        6,
        s.peaks_at_heterodyne() && s.failed_points == 0,
        format!(
            "argmax chi_c(t) = {}, argmin δ̄(t) = {} on 19 points (half step {:.3}); t <-> 1-t defect {:.1e}",
            s.argmax_chi_c, s.argmin_delta_mixture, s.tolerance, s.symmetry_defect
        ),
    );
}

fn criterion_7(rep: &mut Report) {
    let grid: Vec<f64> = (0..13).map(|k| 0.001 * k as f64).collect();
    let (_, s) = run_squeezed_scan(&params(0.1, 0.5, Probe::Coherent), &grid, &EvalOptions::default()).unwrap();
    let pass = s.r_star > 0.0 && s.r_star < 0.01 && s.relative_improvement > 0.0 && s.relative_improvement < 1e-4;
    rep.line(
        7,
        pass,
        format!("r* = {:.5}, A_s gain over r=0 {:.3e} relative", s.r_star, s.relative_improvement),
    );
}

fn criterion_8(rep: &mut Report) {
    let spec = PerturbationStudySpec {
        samples: 10_000,
        eta: 1e-2,
        seed: 2017,
        keep_fraction: 0.5,
    };
    let st = run_perturbation_study(&spec, &params(0.5, 0.5, Probe::Coherent)).unwrap();
    rep.line(
        8,
        st.fraction_above > 0.0,
        format!(
            "{:.2}% of 10^4 perturbed probes beat the coherent value {:.6e} (best {:.6e}, {} redraws)",
            100.0 * st.fraction_above,
            st.reference,
            st.best,
            st.rejected
        ),
    );
}

/// Independent Holevo value for commuting diagonal states.
fn shannon_holevo(a: &[f64], b: &[f64]) -> f64 {
    let h = |v: &[f64]| -> f64 { v.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum() };
    let mix: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
    h(&mix) - 0.5 * h(a) - 0.5 * h(b)
}

fn criterion_9(rep: &mut Report, figs: &[Fig2]) {
    // Fock vs covariance-matrix entropies of the states the pipeline builds
    let mut ent: f64 = 0.0;
    for (eps, n) in [(0.02, 0.01), (0.1, 0.5), (0.3, 0.5), (0.3, 0.01)] {
        for probe in [Probe::Epr, Probe::Coherent, Probe::SqueezedCoherent { r: 0.003 }] {
            let pair = converged_pair(&params(eps, n, probe)).unwrap().pair;
            for (rho, g) in [(&pair.rho0, &pair.gauss0), (&pair.rho1, &pair.gauss1)] {
                let g = g.as_ref().unwrap();
                ent = ent.max((von_neumann_entropy(rho).unwrap() - gaussian_entropy(g).unwrap()).abs());
            }
        }
    }

    // commuting pairs collapse all three quantities onto the Shannon value
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut commuting: f64 = 0.0;
    for _ in 0..5 {
        let d = 6;
        let mut draw = || {
            let v: Vec<f64> = (0..d).map(|_| rng.random::<f64>() + 0.01).collect();
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect::<Vec<_>>()
        };
        let (a, b) = (draw(), draw());
        let spec = TruncationSpec::single(d, 1e-6).unwrap();
        let pair = EncodedPair::from_states(
            FockState::from_diagonal(spec.clone(), &a).unwrap(),
            FockState::from_diagonal(spec, &b).unwrap(),
        )
        .unwrap();
        let expect = shannon_holevo(&a, &b);
        for v in [holevo(&pair, 0.5).unwrap(), fuchs_lower(&pair, 0.5).unwrap(), fuchs_upper(&pair, 0.5, 21).unwrap()] {
            commuting = commuting.max((v - expect).abs());
        }
    }

    // heterodyne outcome law of the idler vs the Fock-space density
    let mut tv: f64 = 0.0;
    for n in [0.01, 0.5] {
        let law = collapsed_probe_distribution(&params(0.1, n, Probe::Epr)).unwrap();
        let d = 12 + (60.0 * n) as usize;
        let rho = epr_state(n, &TruncationSpec::new(vec![d, d], 1e-6).unwrap()).unwrap();
        let rule = gauss_legendre_on(96, 0.0, ((n + 1.0) * 1e9f64.ln()).sqrt()).unwrap();
        let dist = 0.5
            * rule.integrate(|r| {
                let (_, fock) = project_coherent(&rho, 1, C64::new(r, 0.0), 1.0).unwrap();
                2.0 * PI * r * (fock - law.outcome_density(C64::new(r, 0.0))).abs()
            });
        tv = tv.max(dist);
    }

    // bound ordering on every swept point (round-off slack 1e-12 bits)
    let mut ordered = true;
    for f in figs {
        for tag in ["q", "s"] {
            let l = f.col(&format!("A_{tag}_lower"));
            let u = f.col(&format!("A_{tag}_upper"));
            let chi = f.col(&format!("chi_{tag}"));
            for k in 0..l.len() {
                ordered &= l[k] <= u[k] + 1e-12 && u[k] <= chi[k] + 1e-12;
            }
        }
    }
    let pass = ent <= 1e-6 && commuting <= 1e-6 && tv <= 1e-4 && ordered;
    rep.line(
        9,
        pass,
        format!("entropy Fock vs Gaussian {ent:.1e}; commuting pairs {commuting:.1e}; heterodyne TV {tv:.1e}; lower <= upper <= Holevo: {ordered}"),
    );
}

fn criterion_10(rep: &mut Report) {
    let energies: Vec<f64> = (0..11).map(|k| 0.1 * k as f64).collect();
    let c = run_concavity_check(&params(0.1, 0.5, Probe::Coherent), &energies, &CONCAVITY_EPSILONS).unwrap();
    let worst: Vec<String> = c.curves.iter().map(|k| format!("ε={}: {:.2e}", k.epsilon, k.max_second_difference)).collect();
    rep.line(
        10,
        c.concave(),
        format!("largest second difference of A_s(E) ({}; limit {:e})", worst.join(", "), c.tol),
    );
}

fn main() -> ExitCode {
    // `cargo test -- <filter>` passes arguments; only run when unfiltered
    // or when asked for by name
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return ExitCode::SUCCESS;
    }
    let mut rep = Report {
        failed: Vec::new(),
        start: Instant::now(),
    };
    println!("acceptance suite (n̄_env = {NENV})");
    let figs = fig2_sweeps();
    criterion_1(&mut rep, &figs);
    criterion_2(&mut rep, &figs);
    criterion_3(&mut rep, &figs);
    criterion_4(&mut rep);
    criterion_5(&mut rep, &figs);
    criterion_6(&mut rep);
    criterion_7(&mut rep);
    criterion_8(&mut rep);
    criterion_9(&mut rep, &figs);
    criterion_10(&mut rep);
    if rep.failed.is_empty() {
        println!("all 10 criteria PASS");
        ExitCode::SUCCESS
    } else {
        println!("FAILED criteria: {:?}", rep.failed);
        ExitCode::FAILURE
    }
}
