use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qillum::discord::{theorem1_check_pair, Theorem1Options, THEOREM1_TOL};
use qillum::scenarios::Probe;
use qillum::truncation::{converged_pair, converged_pair_with, HOLEVO_TOL};
use qillum_experiments::cache::Cache;
use qillum_experiments::config::{parse_dims, parse_grid, Overrides, RunConfig};
use qillum_experiments::error::{ExpError, Result};
use qillum_experiments::output::{self, fmt_num, Series};
use qillum_experiments::perturb::{run_perturbation_study, PerturbationStudySpec};
use qillum_experiments::studies::{
    open_t_grid, run_concavity_check, run_generaldyne_scan, run_squeezed_scan, CONCAVITY_EPSILONS,
};
use qillum_experiments::sweep::{parse_quantities, run_sweep, Axis, DimsMode, EvalOptions, SweepSpec};

/// Information-theoretic analysis of quantum illumination.
///
/// Exit status: 0 on success, 1 when a check (theorem1, concavity) fails or
/// a file cannot be written, 2 on configuration or usage errors, 3 when a
/// numerical procedure does not converge.
#[derive(Parser)]
#[command(name = "qillum", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// TOML file with keys epsilon, nbar_probe, nbar_env, p0, probe, dims,
    /// nodes, seed.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Outcome-integral node count (Laguerre / radial / Hermite).
    #[arg(long, global = true)]
    nodes: Option<usize>,
    /// Starting Fock cutoffs: probe,detector[,idler].
    #[arg(long, global = true, value_parser = parse_dims)]
    dims: Option<Vec<usize>>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Mean photon number of the probe.
    #[arg(long, global = true)]
    nbar: Option<f64>,
    /// Mean photon number of the environment.
    #[arg(long, global = true)]
    nenv: Option<f64>,
    /// Prior probability that the object is present.
    #[arg(long, global = true)]
    p0: Option<f64>,
    /// epr, coherent or squeezed.
    #[arg(long, global = true)]
    probe: Option<String>,
    /// Recompute every row instead of reading the cache.
    #[arg(long, global = true)]
    no_cache: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Information quantities along one parameter axis.
    Sweep {
        /// epsilon, nbar_probe, t or squeezing_r.
        #[arg(long)]
        axis: Axis,
        /// start:stop:count or a comma list.
        #[arg(long)]
        grid: String,
        /// Comma list, e.g. chi_q,chi_s,A_q_bounds,A_s_bounds.
        #[arg(long, default_value = "chi_q,chi_s,A_q_bounds,A_s_bounds")]
        quantities: String,
        /// Artifact stem (default sweep_<axis>).
        #[arg(long)]
        name: Option<String>,
    },
    /// chi_c and the mixture discord against general-dyne transmissivity.
    Generaldyne {
        /// Transmissivities in (0, 1); default 19 points from 0.05 to 0.95.
        #[arg(long)]
        grid: Option<String>,
    },
    /// Random perturbations of a coherent probe at fixed energy.
    Perturb {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 1e-2)]
        eta: f64,
        /// Fraction of the best samples kept for the histogram.
        #[arg(long, default_value_t = 0.5)]
        keep: f64,
    },
    /// Single-mode accessible information against probe squeezing.
    Squeezed {
        #[arg(long, default_value = "0:0.012:13")]
        grid: String,
    },
    /// Concavity of the single-mode accessible information in energy.
    Concavity {
        /// Probe energies.
        #[arg(long, default_value = "0:1:11")]
        grid: String,
    },
    /// Consumed discord against the quantum advantage.
    Theorem1 {
        #[arg(long, default_value_t = THEOREM1_TOL)]
        tol: f64,
        /// Transmissivities for the measurement-optimality condition.
        #[arg(long)]
        t_grid: Option<String>,
        /// Skip the measurement-optimality scan.
        #[arg(long)]
        skip_measurement: bool,
    },
    /// Print the effective configuration.
    ShowConfig,
}

enum Outcome {
    Done,
    CheckFailed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(g: &Global) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        epsilon: g.epsilon,
        nbar_probe: g.nbar,
        nbar_env: g.nenv,
        p0: g.p0,
        probe: g.probe.clone(),
        dims: g.dims.clone(),
        nodes: g.nodes,
        seed: g.seed,
    });
    Ok(cfg)
}

fn eval_options(cfg: &RunConfig) -> Result<EvalOptions> {
    Ok(EvalOptions {
        dims: match cfg.pair_dims()? {
            Some(d) => DimsMode::StartAt(d),
            None => DimsMode::Adaptive,
        },
        nodes: cfg.nodes,
    })
}

fn cache_for(g: &Global) -> Cache {
    if g.no_cache {
        Cache::disabled()
    } else {
        Cache::from_env_or(g.out.join("cache"))
    }
}

fn say(path: &Path) {
    println!("wrote {}", path.display());
}

fn run(cli: Cli) -> Result<Outcome> {
    let g = &cli.global;
    let cfg = load_config(g)?;
    let params = cfg.params()?;
    let opts = eval_options(&cfg)?;
    let out = &g.out;
    match cli.cmd {
        Cmd::ShowConfig => {
            print!("{}", cfg.to_toml());
        }
        Cmd::Sweep {
            axis,
            grid,
            quantities,
            name,
        } => {
            let spec = SweepSpec {
                axis,
                grid: parse_grid(&grid)?,
                fixed: params,
                quantities: parse_quantities(&quantities)?,
            };
            spec.validate()?;
            let res = run_sweep(&spec, &opts, &cache_for(g))?;
            let stem = name.unwrap_or_else(|| format!("sweep_{axis}"));
            let csv = out.join(format!("{stem}.csv"));
            output::sweep_csv(&csv, &res)?;
            say(&csv);
            for p in output::sweep_plots(out, &stem, &res, &spec.quantities)? {
                say(&p);
            }
            println!("{} points ({} from cache)", res.rows.len(), res.cached);
            let failed = res.failures();
            if failed > 0 {
                return Err(ExpError::Failed(format!("{failed} of {} points failed; see the flags column", res.rows.len())));
            }
        }
        Cmd::Generaldyne { grid } => {
            let t_grid = match grid {
                Some(s) => parse_grid(&s)?,
                None => open_t_grid(19),
            };
            let (res, summary) = run_generaldyne_scan(&params, &t_grid, &opts, &cache_for(g))?;
            let csv = out.join("generaldyne.csv");
            output::sweep_csv(&csv, &res)?;
            say(&csv);
            for p in output::sweep_plots(out, "generaldyne", &res, &[
                qillum_experiments::sweep::Quantity::ChiC,
                qillum_experiments::sweep::Quantity::DeltaMixture,
            ])? {
                say(&p);
            }
            let json = out.join("generaldyne.json");
            output::write_json(&json, &summary)?;
            say(&json);
            println!("argmax chi_c at t = {}", summary.argmax_chi_c);
            println!("argmin delta_mixture at t = {}", summary.argmin_delta_mixture);
            println!("symmetry defect {}", fmt_num(summary.symmetry_defect));
        }
        Cmd::Perturb { samples, eta, keep } => {
            let spec = PerturbationStudySpec {
                samples,
                eta,
                seed: cfg.seed,
                keep_fraction: keep,
            };
            let p = params.with_probe(Probe::Coherent, params.nbar_probe)?;
            let study = run_perturbation_study(&spec, &p)?;
            let samples_csv = out.join("perturb_samples.csv");
            let rows: Vec<Vec<String>> =
                study.values.iter().enumerate().map(|(i, v)| vec![i.to_string(), fmt_num(*v)]).collect();
            output::write_table(&samples_csv, &["sample".into(), "chi_s".into()], &rows)?;
            say(&samples_csv);
            let hist_csv = out.join("perturb_histogram.csv");
            let rows: Vec<Vec<String>> = study
                .counts
                .iter()
                .enumerate()
                .map(|(k, c)| vec![fmt_num(study.edges[k]), fmt_num(study.edges[k + 1]), c.to_string()])
                .collect();
            output::write_table(&hist_csv, &["bin_lo".into(), "bin_hi".into(), "count".into()], &rows)?;
            say(&hist_csv);
            let svg = out.join("perturb_histogram.svg");
            output::write_text(
                &svg,
                &output::histogram_plot("perturbed probes (kept samples)", "Holevo information (bits)", &study.edges, &study.counts, study.reference),
            )?;
            say(&svg);
            let json = out.join("perturb.json");
            output::write_json(
                &json,
                &serde_json::json!({
                    "spec": study.spec,
                    "dims": study.dims,
                    "reference": study.reference,
                    "best": study.best,
                    "kept": study.kept,
                    "rejected": study.rejected,
                    "fraction_above": study.fraction_above,
                }),
            )?;
            say(&json);
            println!("coherent reference {}", fmt_num(study.reference));
            println!("best sample        {}", fmt_num(study.best));
            println!("fraction above reference {:.6}", study.fraction_above);
            println!("rejected draws {}", study.rejected);
        }
        Cmd::Squeezed { grid } => {
            let r_grid = parse_grid(&grid)?;
            let (res, summary) = run_squeezed_scan(&params, &r_grid, &opts)?;
            let csv = out.join("squeezed.csv");
            output::sweep_csv(&csv, &res)?;
            say(&csv);
            let svg = out.join("squeezed.svg");
            let series = [Series {
                name: "A_s_lower".into(),
                xs: res.axis_values(),
                ys: res.column("A_s_lower").expect("column"),
            }];
            output::write_text(&svg, &output::line_plot("squeezed coherent probe", "squeezing r", "bits", &series, Some(summary.r_star)))?;
            say(&svg);
            let json = out.join("squeezed.json");
            output::write_json(&json, &summary)?;
            say(&json);
            println!("r* = {:.6}", summary.r_star);
            println!("relative improvement over r = 0: {}", fmt_num(summary.relative_improvement));
        }
        Cmd::Concavity { grid } => {
            let energies = parse_grid(&grid)?;
            let check = run_concavity_check(&params, &energies, &CONCAVITY_EPSILONS)?;
            let mut header = vec!["nbar_probe".to_string()];
            for c in &check.curves {
                header.push(format!("A_s_lower_eps{}", c.epsilon));
            }
            for c in &check.curves {
                header.push(format!("scaled_eps{}", c.epsilon));
            }
            let rows: Vec<Vec<String>> = energies
                .iter()
                .enumerate()
                .map(|(k, &e)| {
                    let mut r = vec![fmt_num(e)];
                    r.extend(check.curves.iter().map(|c| fmt_num(c.a_s[k])));
                    r.extend(check.curves.iter().map(|c| fmt_num(c.scaled[k])));
                    r
                })
                .collect();
            let csv = out.join("concavity.csv");
            output::write_table(&csv, &header, &rows)?;
            say(&csv);
            for (stem, scaled) in [("concavity_raw", false), ("concavity_scaled", true)] {
                let series: Vec<Series> = check
                    .curves
                    .iter()
                    .map(|c| Series {
                        name: format!("epsilon = {}", c.epsilon),
                        xs: energies.clone(),
                        ys: if scaled { c.scaled.clone() } else { c.a_s.clone() },
                    })
                    .collect();
                let ylabel = if scaled { "A_s / epsilon (bits)" } else { "A_s (bits)" };
                let svg = out.join(format!("{stem}.svg"));
                output::write_text(&svg, &output::line_plot(stem, "probe energy", ylabel, &series, None))?;
                say(&svg);
            }
            let json = out.join("concavity.json");
            output::write_json(&json, &check)?;
            say(&json);
            for c in &check.curves {
                println!("epsilon {}: max second difference {}", c.epsilon, fmt_num(c.max_second_difference));
            }
            println!("scaled gaps {:?}", check.scaled_gaps);
            let pass = check.passed();
            println!("{}", if pass { "PASS" } else { "FAIL" });
            if !pass {
                return Ok(Outcome::CheckFailed);
            }
        }
        Cmd::Theorem1 {
            tol,
            t_grid,
            skip_measurement,
        } => {
            let p = params.with_probe(Probe::Epr, params.nbar_probe)?;
            let mut t_opts = Theorem1Options {
                check_measurement: !skip_measurement,
                ..Theorem1Options::default()
            };
            if let Some(s) = t_grid {
                t_opts.t_grid = parse_grid(&s)?;
            }
            if let Some(n) = cfg.nodes {
                t_opts.hermite_nodes = n;
            }
            let pair = match cfg.pair_dims()? {
                Some(d) => converged_pair_with(&p, d, HOLEVO_TOL)?.pair,
                None => converged_pair(&p)?.pair,
            };
            if !(tol > 0.0) {
                return Err(ExpError::Config(format!("tolerance must be positive, got {tol}")));
            }
            let r = theorem1_check_pair(&p, &pair, tol, &t_opts)?;
            let json = out.join("theorem1.json");
            output::write_json(&json, &r)?;
            say(&json);
            if let (Some(c), Some(a), Some(res)) = (r.consumed, r.advantage, r.residual) {
                println!("consumed discord   {}", fmt_num(c));
                println!("chi_q - chi_c      {}", fmt_num(a));
                println!("residual           {} (tol {})", fmt_num(res), fmt_num(tol));
            }
            println!("status {:?}", r.status);
            println!("{}", if r.passed() { "PASS" } else { "FAIL" });
            if !r.passed() {
                return Ok(Outcome::CheckFailed);
            }
        }
    }
    Ok(Outcome::Done)
}
