//! Parameter sweeps: one row of information quantities per grid point.

use std::fmt;
use std::str::FromStr;

use qillum::discord::{consumed_discord_with, discord_mixture, discord_mixture_generaldyne, RADIAL_NODES};
use qillum::info::{
    chi_c_generaldyne, info_report, integrated_local, InfoReport, UpperOptions, HERMITE_NODES, LAGUERRE_NODES,
};
use qillum::scenarios::{build_pair_with, EncodedPair, PairDims, Probe, ScenarioParams};
use qillum::truncation::{converged_pair, converged_pair_with, HOLEVO_TOL};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::Cache;
use crate::config::check_grid;
use crate::error::{config, Result};

/// Bumped whenever a change alters computed values, so stale cache entries
/// stop matching.
pub const CACHE_SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Epsilon,
    NbarProbe,
    /// General-dyne transmissivity.
    T,
    SqueezingR,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::Epsilon, Axis::NbarProbe, Axis::T, Axis::SqueezingR];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Epsilon => "epsilon",
            Axis::NbarProbe => "nbar_probe",
            Axis::T => "t",
            Axis::SqueezingR => "squeezing_r",
        }
    }

    /// Quantities that make sense along this axis.
    pub fn allows(self, q: Quantity) -> bool {
        use Quantity::*;
        match self {
            Axis::T => matches!(q, ChiC | DeltaMixture),
            Axis::SqueezingR => matches!(q, ChiS | ASBounds),
            Axis::Epsilon | Axis::NbarProbe => true,
        }
    }

    fn check_value(self, x: f64, fixed: &ScenarioParams) -> Result<()> {
        let ok = match self {
            Axis::Epsilon => (0.0..1.0).contains(&x),
            Axis::NbarProbe => x >= 0.0,
            Axis::T => x > 0.0 && x < 1.0,
            Axis::SqueezingR => x >= 0.0 && x.sinh().powi(2) <= fixed.nbar_probe,
        };
        if ok {
            Ok(())
        } else {
            let domain = match self {
                Axis::Epsilon => "[0, 1)".to_string(),
                Axis::NbarProbe => "[0, inf)".to_string(),
                Axis::T => "(0, 1)".to_string(),
                Axis::SqueezingR => format!("r >= 0 with sinh^2 r <= nbar_probe = {}", fixed.nbar_probe),
            };
            Err(config(format!("{} = {x} outside its domain {domain}", self.name())))
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown axis '{s}' (expected epsilon, nbar_probe, t or squeezing_r)"))
    }
}

/// Information quantities a sweep can report, all in bits.
///
/// `q` refers to the EPR probe with joint measurement, `s` to the
/// single-mode probe, `c` to the EPR probe with the idler measured first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "chi_q")]
    ChiQ,
    #[serde(rename = "chi_s")]
    ChiS,
    #[serde(rename = "chi_c")]
    ChiC,
    #[serde(rename = "A_q_bounds")]
    AQBounds,
    #[serde(rename = "A_s_bounds")]
    ASBounds,
    #[serde(rename = "A_c_bounds")]
    ACBounds,
    #[serde(rename = "delta_con")]
    DeltaCon,
    /// Discord of the prior mixture.
    #[serde(rename = "delta_mixture")]
    DeltaMixture,
    /// `χ_q - χ_s`.
    #[serde(rename = "advantage_s")]
    AdvantageS,
    /// `χ_q - χ_c`.
    #[serde(rename = "advantage_c")]
    AdvantageC,
    /// Bracket on `A_q - A_s` from the Fuchs bounds.
    #[serde(rename = "advantage_A_s")]
    AdvantageAS,
    #[serde(rename = "advantage_A_c")]
    AdvantageAC,
}

impl Quantity {
    pub const ALL: [Quantity; 12] = [
        Quantity::ChiQ,
        Quantity::ChiS,
        Quantity::ChiC,
        Quantity::AQBounds,
        Quantity::ASBounds,
        Quantity::ACBounds,
        Quantity::DeltaCon,
        Quantity::DeltaMixture,
        Quantity::AdvantageS,
        Quantity::AdvantageC,
        Quantity::AdvantageAS,
        Quantity::AdvantageAC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::ChiQ => "chi_q",
            Quantity::ChiS => "chi_s",
            Quantity::ChiC => "chi_c",
            Quantity::AQBounds => "A_q_bounds",
            Quantity::ASBounds => "A_s_bounds",
            Quantity::ACBounds => "A_c_bounds",
            Quantity::DeltaCon => "delta_con",
            Quantity::DeltaMixture => "delta_mixture",
            Quantity::AdvantageS => "advantage_s",
            Quantity::AdvantageC => "advantage_c",
            Quantity::AdvantageAS => "advantage_A_s",
            Quantity::AdvantageAC => "advantage_A_c",
        }
    }

    /// CSV columns contributed by this quantity.
    pub fn columns(self) -> Vec<String> {
        match self {
            Quantity::AQBounds => vec!["A_q_lower".into(), "A_q_upper".into()],
            Quantity::ASBounds => vec!["A_s_lower".into(), "A_s_upper".into()],
            Quantity::ACBounds => vec!["A_c_lower".into(), "A_c_upper".into()],
            Quantity::AdvantageAS => vec!["advantage_A_s_lower".into(), "advantage_A_s_upper".into()],
            Quantity::AdvantageAC => vec!["advantage_A_c_lower".into(), "advantage_A_c_upper".into()],
            q => vec![q.name().into()],
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Quantity::ALL.into_iter().find(|q| q.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Quantity::ALL.iter().map(|q| q.name()).collect();
            format!("unknown quantity '{s}' (expected one of {})", names.join(", "))
        })
    }
}

pub fn parse_quantities(s: &str) -> Result<Vec<Quantity>> {
    let qs = s
        .split(',')
        .map(|t| t.trim().parse::<Quantity>().map_err(config))
        .collect::<Result<Vec<_>>>()?;
    if qs.is_empty() {
        return Err(config("no quantities requested"));
    }
    Ok(qs)
}

/// How Fock cutoffs are chosen at each point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum DimsMode {
    /// Heuristic start, doubled until the Holevo value settles.
    #[default]
    Adaptive,
    /// User-chosen start, doubled until the Holevo value settles.
    StartAt(PairDims),
    /// No doubling; every point uses these cutoffs.
    Fixed(PairDims),
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct EvalOptions {
    pub dims: DimsMode,
    /// Overrides the outcome-integral node counts (Laguerre for `chi_c` and
    /// `A_c`, radial for the discord, Hermite on the `t` axis).
    pub nodes: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub fixed: ScenarioParams,
    pub quantities: Vec<Quantity>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        check_grid(&self.grid)?;
        if self.quantities.is_empty() {
            return Err(config("no quantities requested"));
        }
        for &q in &self.quantities {
            if !self.axis.allows(q) {
                return Err(config(format!("quantity {q} is not available along the {} axis", self.axis)));
            }
        }
        for &x in &self.grid {
            self.axis.check_value(x, &self.fixed)?;
        }
        Ok(())
    }

    pub fn columns(&self) -> Vec<String> {
        self.quantities.iter().flat_map(|q| q.columns()).collect()
    }

    /// Scenario at grid value `x`.
    pub fn params_at(&self, x: f64) -> Result<ScenarioParams> {
        let mut p = self.fixed.clone();
        match self.axis {
            Axis::Epsilon => p.epsilon = x,
            Axis::NbarProbe => p.nbar_probe = x,
            Axis::T => {}
            Axis::SqueezingR => p.probe = Probe::SqueezedCoherent { r: x },
        }
        p.validate()?;
        Ok(p)
    }
}

/// One grid point. Rows that failed carry `NaN` values and a flag message.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub axis_value: f64,
    pub values: Vec<f64>,
    /// Fock cutoffs used, e.g. `q=30x60x30 s=20x60`.
    pub dims: String,
    /// `ok`, or the reason the point failed.
    pub flags: String,
}

impl ResultRow {
    pub fn ok(&self) -> bool {
        self.flags == "ok"
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub axis: Axis,
    pub columns: Vec<String>,
    pub rows: Vec<ResultRow>,
    /// Rows served from the cache.
    pub cached: usize,
}

impl SweepResult {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[k]).collect())
    }

    pub fn axis_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.axis_value).collect()
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.ok()).count()
    }
}

/// Probe used for the single-mode quantities: the configured one when it
/// is single-mode, a coherent state otherwise.
fn single_mode(p: &ScenarioParams) -> Result<ScenarioParams> {
    let probe = match &p.probe {
        Probe::Epr => Probe::Coherent,
        other => other.clone(),
    };
    Ok(p.with_probe(probe, p.nbar_probe)?)
}

fn epr(p: &ScenarioParams) -> Result<ScenarioParams> {
    Ok(p.with_probe(Probe::Epr, p.nbar_probe)?)
}

fn fmt_dims(tag: &str, d: &PairDims, two_mode: bool) -> String {
    if two_mode {
        format!("{tag}={}x{}x{}", d.probe, d.detector, d.idler)
    } else {
        format!("{tag}={}x{}", d.probe, d.detector)
    }
}

/// The pair for `p` under `mode`, with its Holevo value.
pub fn pair_for(p: &ScenarioParams, mode: &DimsMode) -> Result<(EncodedPair, f64)> {
    Ok(match mode {
        DimsMode::Adaptive => {
            let c = converged_pair(p)?;
            (c.pair, c.holevo)
        }
        DimsMode::StartAt(d) => {
            let mut start = *d;
            if !p.probe.is_two_mode() {
                start.idler = start.probe;
            }
            let c = converged_pair_with(p, start, HOLEVO_TOL)?;
            (c.pair, c.holevo)
        }
        DimsMode::Fixed(d) => {
            let pair = build_pair_with(p, d)?;
            let chi = qillum::info::holevo(&pair, p.p0)?;
            (pair, chi)
        }
    })
}

struct PairInfo {
    holevo: f64,
    report: Option<InfoReport>,
}

fn pair_info(p: &ScenarioParams, mode: &DimsMode, bounds: bool, tag: &str, dims: &mut Vec<String>) -> Result<PairInfo> {
    let (pair, holevo) = pair_for(p, mode)?;
    dims.push(fmt_dims(tag, &pair.dims, pair.is_two_mode()));
    let report = if bounds {
        Some(info_report(&pair, p.p0, &UpperOptions::default())?)
    } else {
        None
    };
    Ok(PairInfo { holevo, report })
}

fn bounds_of(info: &Option<PairInfo>) -> (f64, f64) {
    let r = info.as_ref().and_then(|i| i.report.as_ref()).expect("bounds were requested");
    (r.fuchs_lower, r.fuchs_upper)
}

/// Evaluates every requested quantity at one grid value.
pub fn evaluate_point(spec: &SweepSpec, x: f64, opts: &EvalOptions) -> Result<(Vec<f64>, String)> {
    use Quantity::*;
    let p = spec.params_at(x)?;
    let has = |qs: &[Quantity]| spec.quantities.iter().any(|q| qs.contains(q));
    let mut dims = Vec::new();
    let mut out = Vec::new();

    if spec.axis == Axis::T {
        let nodes = opts.nodes.unwrap_or(HERMITE_NODES);
        let pe = epr(&p)?;
        for &q in &spec.quantities {
            out.push(match q {
                ChiC => chi_c_generaldyne(&pe, x, nodes)?,
                DeltaMixture => discord_mixture_generaldyne(&pe, x, nodes)?,
                _ => unreachable!("validated against the axis"),
            });
        }
        return Ok((out, format!("hermite={nodes}")));
    }

    let q_info = if has(&[ChiQ, AQBounds, AdvantageS, AdvantageC, AdvantageAS, AdvantageAC]) {
        Some(pair_info(&epr(&p)?, &opts.dims, has(&[AQBounds, AdvantageAS, AdvantageAC]), "q", &mut dims)?)
    } else {
        None
    };
    let s_info = if has(&[ChiS, ASBounds, AdvantageS, AdvantageAS]) {
        Some(pair_info(&single_mode(&p)?, &opts.dims, has(&[ASBounds, AdvantageAS]), "s", &mut dims)?)
    } else {
        None
    };
    let c_info = if has(&[ChiC, ACBounds, AdvantageC, AdvantageAC]) {
        let bounds = has(&[ACBounds, AdvantageAC]);
        let nodes = opts.nodes.unwrap_or(LAGUERRE_NODES);
        let r = integrated_local(&epr(&p)?, bounds, nodes, &UpperOptions::default())?;
        dims.push(fmt_dims("c", &r.dims, false));
        Some(r)
    } else {
        None
    };
    let radial = opts.nodes.unwrap_or(RADIAL_NODES);
    let delta = if has(&[DeltaCon]) {
        Some(consumed_discord_with(&epr(&p)?, radial)?)
    } else {
        None
    };

    let chi_q = || q_info.as_ref().map(|i| i.holevo).expect("computed");
    let chi_s = || s_info.as_ref().map(|i| i.holevo).expect("computed");
    let c_bounds = || {
        let r = c_info.as_ref().expect("computed");
        (r.fuchs_lower.expect("bounds"), r.fuchs_upper.expect("bounds"))
    };
    for &q in &spec.quantities {
        match q {
            ChiQ => out.push(chi_q()),
            ChiS => out.push(chi_s()),
            ChiC => out.push(c_info.as_ref().expect("computed").holevo),
            AQBounds => {
                let (l, u) = bounds_of(&q_info);
                out.extend([l, u]);
            }
            ASBounds => {
                let (l, u) = bounds_of(&s_info);
                out.extend([l, u]);
            }
            ACBounds => {
                let (l, u) = c_bounds();
                out.extend([l, u]);
            }
            DeltaCon => out.push(delta.as_ref().expect("computed").consumed),
            DeltaMixture => out.push(discord_mixture(&epr(&p)?, radial)?),
            AdvantageS => out.push(chi_q() - chi_s()),
            AdvantageC => out.push(chi_q() - c_info.as_ref().expect("computed").holevo),
            AdvantageAS => {
                let (ql, qu) = bounds_of(&q_info);
                let (sl, su) = bounds_of(&s_info);
                out.extend([ql - su, qu - sl]);
            }
            AdvantageAC => {
                let (ql, qu) = bounds_of(&q_info);
                let (cl, cu) = c_bounds();
                out.extend([ql - cu, qu - cl]);
            }
        }
    }
    Ok((out, dims.join(" ")))
}

#[derive(Serialize)]
struct RowKey<'a> {
    schema: u32,
    version: &'a str,
    axis: Axis,
    /// Exact bit patterns, so nearby grid values never collide.
    value: u64,
    epsilon: u64,
    nbar_probe: u64,
    nbar_env: u64,
    p0: u64,
    probe: &'a str,
    squeezing_r: Option<u64>,
    quantities: &'a [Quantity],
    opts: &'a EvalOptions,
}

/// Cache key of one grid point.
pub fn row_key(spec: &SweepSpec, x: f64, opts: &EvalOptions) -> String {
    let f = &spec.fixed;
    Cache::key(&RowKey {
        schema: CACHE_SCHEMA,
        version: env!("CARGO_PKG_VERSION"),
        axis: spec.axis,
        value: x.to_bits(),
        epsilon: f.epsilon.to_bits(),
        nbar_probe: f.nbar_probe.to_bits(),
        nbar_env: f.nbar_env.to_bits(),
        p0: f.p0.to_bits(),
        probe: f.probe.name(),
        squeezing_r: match f.probe {
            Probe::SqueezedCoherent { r } => Some(r.to_bits()),
            _ => None,
        },
        quantities: &spec.quantities,
        opts,
    })
}

fn compute_row(spec: &SweepSpec, x: f64, opts: &EvalOptions, width: usize) -> ResultRow {
    match evaluate_point(spec, x, opts) {
        Ok((values, dims)) if values.iter().all(|v| v.is_finite()) => ResultRow {
            axis_value: x,
            values,
            dims,
            flags: "ok".into(),
        },
        Ok((_, dims)) => ResultRow {
            axis_value: x,
            values: vec![f64::NAN; width],
            dims,
            flags: "non-finite result".into(),
        },
        Err(e) => ResultRow {
            axis_value: x,
            values: vec![f64::NAN; width],
            dims: String::new(),
            flags: format!("failed: {e}"),
        },
    }
}

/// Evaluates every grid point (in parallel, output in grid order). A point
/// that fails is recorded in its row's flags and the sweep carries on.
///
/// For the `squeezing_r` axis with adaptive cutoffs, the cutoffs converged
/// at the largest `r` are used for every point, so the curve is not
/// perturbed by cutoff changes along the grid.
pub fn run_sweep(spec: &SweepSpec, opts: &EvalOptions, cache: &Cache) -> Result<SweepResult> {
    spec.validate()?;
    let mut opts = opts.clone();
    if spec.axis == Axis::SqueezingR && !matches!(opts.dims, DimsMode::Fixed(_)) {
        let top = spec.params_at(*spec.grid.last().expect("non-empty grid"))?;
        let start = match opts.dims {
            DimsMode::StartAt(d) => d,
            _ => PairDims::initial(&top),
        };
        let conv = converged_pair_with(&top, start, HOLEVO_TOL)?;
        opts.dims = DimsMode::Fixed(conv.report.dims);
    }
    let columns = spec.columns();
    let width = columns.len();
    let rows: Vec<(ResultRow, bool)> = spec
        .grid
        .par_iter()
        .map(|&x| {
            let key = row_key(spec, x, &opts);
            if let Some(row) = cache.get::<ResultRow>(&key) {
                if row.values.len() == width && row.axis_value.to_bits() == x.to_bits() {
                    return Ok((row, true));
                }
            }
            let row = compute_row(spec, x, &opts, width);
            if row.ok() {
                cache.put(&key, &row)?;
            }
            Ok((row, false))
        })
        .collect::<Result<_>>()?;
    let cached = rows.iter().filter(|r| r.1).count();
    Ok(SweepResult {
        axis: spec.axis,
        columns,
        rows: rows.into_iter().map(|r| r.0).collect(),
        cached,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for q in Quantity::ALL {
            assert_eq!(q.name().parse::<Quantity>().unwrap(), q);
            assert_eq!(serde_json::to_string(&q).unwrap(), format!("\"{}\"", q.name()));
        }
        for a in Axis::ALL {
            assert_eq!(a.name().parse::<Axis>().unwrap(), a);
        }
        assert!("chi_x".parse::<Quantity>().is_err());
    }

    #[test]
    fn spec_validation() {
        let fixed = ScenarioParams::new(0.1, 0.5, 4.0, 0.5, Probe::Epr).unwrap();
        let mut spec = SweepSpec {
            axis: Axis::T,
            grid: vec![0.25, 0.5, 0.75],
            fixed,
            quantities: vec![Quantity::ChiC],
        };
        assert!(spec.validate().is_ok());
        spec.grid = vec![0.0, 0.5];
        assert!(spec.validate().is_err(), "t endpoints are excluded");
        spec.grid = vec![0.5];
        spec.quantities = vec![Quantity::ChiQ];
        assert!(spec.validate().is_err());
        spec.axis = Axis::SqueezingR;
        spec.quantities = vec![Quantity::ASBounds];
        spec.grid = vec![0.0, 0.7];
        assert!(spec.validate().is_err(), "sinh^2(0.7) > 0.5");
        spec.axis = Axis::Epsilon;
        spec.grid = vec![0.1, 1.0];
        assert!(spec.validate().is_err());
        assert_eq!(
            SweepSpec {
                quantities: vec![Quantity::ChiQ, Quantity::AdvantageAS],
                ..spec
            }
            .columns(),
            vec!["chi_q", "advantage_A_s_lower", "advantage_A_s_upper"]
        );
    }
}
