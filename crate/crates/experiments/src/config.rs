//! Run configuration: a TOML file with flat scenario keys, optionally
//! overridden from the command line.

use std::path::Path;

use qillum::scenarios::{PairDims, Probe, ScenarioParams};
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub epsilon: f64,
    pub nbar_probe: f64,
    pub nbar_env: f64,
    pub p0: f64,
    /// `epr`, `coherent` or `squeezed`.
    pub probe: String,
    /// Squeezing parameter for the `squeezed` probe.
    pub squeezing_r: f64,
    /// Starting Fock cutoffs `[probe, detector]` or `[probe, detector, idler]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    /// Outcome-integral nodes (Laguerre for the collapse integral, radial
    /// Legendre for the discord).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            nbar_probe: 0.5,
            nbar_env: 4.0,
            p0: 0.5,
            probe: "epr".into(),
            squeezing_r: 0.0,
            dims: None,
            nodes: None,
            seed: 2017,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub epsilon: Option<f64>,
    pub nbar_probe: Option<f64>,
    pub nbar_env: Option<f64>,
    pub p0: Option<f64>,
    pub probe: Option<String>,
    pub dims: Option<Vec<usize>>,
    pub nodes: Option<usize>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! take {
            ($($f:ident => $g:ident),*) => {
                $(if let Some(v) = &o.$f { self.$g = v.clone(); })*
            };
        }
        take!(epsilon => epsilon, nbar_probe => nbar_probe, nbar_env => nbar_env, p0 => p0, probe => probe, seed => seed);
        if o.dims.is_some() {
            self.dims = o.dims.clone();
        }
        if o.nodes.is_some() {
            self.nodes = o.nodes;
        }
    }

    pub fn probe(&self) -> Result<Probe> {
        match self.probe.as_str() {
            "epr" => Ok(Probe::Epr),
            "coherent" => Ok(Probe::Coherent),
            "squeezed" => Ok(Probe::SqueezedCoherent { r: self.squeezing_r }),
            other => Err(config(format!("unknown probe '{other}' (expected epr, coherent or squeezed)"))),
        }
    }

    pub fn params(&self) -> Result<ScenarioParams> {
        ScenarioParams::new(self.epsilon, self.nbar_probe, self.nbar_env, self.p0, self.probe()?)
            .map_err(|e| config(e.to_string()))
    }

    /// Starting cutoffs, if the user fixed them.
    pub fn pair_dims(&self) -> Result<Option<PairDims>> {
        let Some(d) = &self.dims else { return Ok(None) };
        let dims = match d.as_slice() {
            [p, det] => PairDims {
                probe: *p,
                detector: *det,
                idler: *p,
            },
            [p, det, i] => PairDims {
                probe: *p,
                detector: *det,
                idler: *i,
            },
            _ => return Err(config("dims takes two or three cutoffs: probe,detector[,idler]")),
        };
        if dims.probe < 2 || dims.detector < 2 || dims.idler < 2 {
            return Err(config("cutoffs must be at least 2"));
        }
        Ok(Some(dims))
    }
}

/// Parses `a:b:n` (n points from a to b inclusive) or a comma list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = |what: &str| config(format!("bad grid '{s}': {what}"));
    let grid: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:count"));
        }
        let a: f64 = parts[0].trim().parse().map_err(|_| bad("start"))?;
        let b: f64 = parts[1].trim().parse().map_err(|_| bad("stop"))?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad("count"))?;
        match n {
            0 => return Err(bad("count must be positive")),
            1 => vec![a],
            _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
        }
    } else {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad(t)))
            .collect::<Result<_>>()?
    };
    check_grid(&grid)?;
    Ok(grid)
}

pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(config("empty grid"));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(config("grid values must be finite"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config("grid must be strictly increasing"));
    }
    Ok(())
}

pub fn parse_dims(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| format!("bad cutoff '{t}'")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        let g = parse_grid("0:0.3:16").unwrap();
        assert_eq!(g.len(), 16);
        assert_eq!(g[0], 0.0);
        assert!((g[15] - 0.3).abs() < 1e-15);
        assert_eq!(parse_grid("0.1, 0.2,0.5").unwrap(), vec![0.1, 0.2, 0.5]);
        assert!(parse_grid("0.2,0.1").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn toml_round_trip_and_overrides() {
        let mut c = RunConfig::from_toml("epsilon = 0.2\nprobe = \"coherent\"\ndims = [20, 80]\n").unwrap();
        assert_eq!(c.epsilon, 0.2);
        assert_eq!(c.nbar_env, 4.0);
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        c.apply(&Overrides {
            epsilon: Some(0.3),
            seed: Some(7),
            ..Default::default()
        });
        assert_eq!((c.epsilon, c.seed), (0.3, 7));
        assert_eq!(c.pair_dims().unwrap().unwrap().idler, 20);
        assert!(RunConfig::from_toml("epsilon = 0.2\nbogus = 1\n").is_err());
        assert!(RunConfig::from_toml("probe = \"laser\"").unwrap().params().is_err());
    }
}
