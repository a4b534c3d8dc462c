//! Run configuration, read from TOML with dotted keys:
//!
//! ```toml
//! [lattice]
//! q11 = 1.0
//! q22 = 1.0
//!
//! [hole]
//! p = [0.5, 0.5]
//! shape = [0.0, 0.0, 1.0, 0.0, 0.0, 1.0]
//!
//! [data]
//! g = [0.0]
//! f = [{ k = [0, 0], re = 1.0 }]
//!
//! [numerics]
//! n = 64
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::error::Error;
use crate::geometry::BoundaryShape;
use crate::lab::geometric_grid;
use crate::lattice_green::Lattice;
use crate::potentials::PeriodicField;
use crate::solver::{BoundaryData, ProblemData};
use crate::Point;

/// Configuration shipped with the binary.
pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

/// Configuration problem, with the offending key path when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.key.is_empty() {
            write!(f, "config error: {}", self.message)
        } else {
            write!(f, "config error at `{}`: {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn at(key: &str) -> impl Fn(Error) -> ConfigError + '_ {
    move |e| ConfigError { key: key.into(), message: e.to_string() }
}

fn bad(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { key: key.into(), message: message.into() }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub q11: f64,
    pub q22: f64,
    pub ewald_split: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HoleSection {
    pub p: [f64; 2],
    /// `[a0, b0, a1, b1, c1, d1, ...]`.
    pub shape: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    pub k: [i64; 2],
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// `[a0, a1, b1, a2, b2, ...]`.
    pub g: Vec<f64>,
    #[serde(default)]
    pub f: Vec<ModeEntry>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    pub n: usize,
    pub grid_m: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    pub eps: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub eps_grid: Option<Vec<f64>>,
    /// `[largest, smallest]`, used with `count` for a geometric grid.
    pub eps_range: Option<[f64; 2]>,
    pub count: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ContinuationSection {
    pub eps_grid: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProbesSection {
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GreenSection {
    /// Points per side of the cell-centred tabulation grid.
    pub grid: Option<usize>,
    pub points: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeSection,
    pub hole: HoleSection,
    pub data: DataSection,
    pub numerics: NumericsSection,
    pub solve: Option<SolveSection>,
    pub sweep: Option<SweepSection>,
    pub continuation: Option<ContinuationSection>,
    pub probes: Option<ProbesSection>,
    pub green: Option<GreenSection>,
    pub verify: Option<VerifySection>,
}

/// A validated configuration together with the objects it describes.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub raw: RunConfig,
    /// Problem data at `eps = 0`; use `with_eps` for a rescaled problem.
    pub problem: ProblemData,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let key = e.message().split('`').nth(1).unwrap_or("").to_string();
            ConfigError { key, message: e.to_string().trim().to_string() }
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad("", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn lattice(&self) -> Result<Lattice, ConfigError> {
        let l = &self.lattice;
        match l.ewald_split {
            Some(a) => Lattice::with_ewald_split(l.q11, l.q22, a).map_err(at("lattice.ewald_split")),
            None => Lattice::new(l.q11, l.q22).map_err(at("lattice")),
        }
    }

    /// Validates every section and builds the problem data.
    pub fn validate(self) -> Result<LoadedConfig, ConfigError> {
        let lattice = self.lattice()?;
        let shape = BoundaryShape::new(self.hole.shape.clone()).map_err(at("hole.shape"))?;
        if !lattice.in_open_cell(self.hole.p) {
            return Err(bad("hole.p", format!("{:?} is not inside the open cell", self.hole.p)));
        }
        let g = BoundaryData::trig(self.data.g.clone()).map_err(at("data.g"))?;
        let modes: Vec<(i64, i64, f64, f64)> = self.data.f.iter().map(|m| (m.k[0], m.k[1], m.re, m.im)).collect();
        let mut f = PeriodicField::from_modes(&lattice, &modes).map_err(at("data.f"))?;
        if let Some(m) = self.numerics.grid_m {
            f = f.with_grid(m).map_err(at("numerics.grid_m"))?;
        }
        let problem = ProblemData::new(&lattice, 0.0, self.hole.p, shape, g, f, self.numerics.n).map_err(|e| match e {
            Error::InvalidShape(_) => at("hole.shape")(e),
            _ => at("numerics.n")(e),
        })?;
        if let Some(s) = &self.solve {
            if !s.eps.is_finite() {
                return Err(bad("solve.eps", "must be finite"));
            }
        }
        if let Some(s) = &self.sweep {
            sweep_grid(s)?;
        }
        if let Some(c) = &self.continuation {
            if c.eps_grid.len() < 2 || c.eps_grid.iter().any(|e| *e == 0.0 || !e.is_finite()) {
                return Err(bad("continuation.eps_grid", "needs at least two finite nonzero values"));
            }
        }
        if let Some(p) = &self.probes {
            if p.points.iter().flatten().any(|v| !v.is_finite()) {
                return Err(bad("probes.points", "points must be finite"));
            }
        }
        if let Some(g) = &self.green {
            if g.grid == Some(0) {
                return Err(bad("green.grid", "must be positive"));
            }
        }
        Ok(LoadedConfig { raw: self, problem })
    }

    pub fn probes(&self) -> Vec<Point> {
        self.probes.as_ref().map(|p| p.points.clone()).unwrap_or_default()
    }
}

/// The sweep grid, strictly decreasing.
pub fn sweep_grid(s: &SweepSection) -> Result<Vec<f64>, ConfigError> {
    let grid = match (&s.eps_grid, s.eps_range, s.count) {
        (Some(g), None, None) => g.clone(),
        (None, Some([hi, lo]), Some(n)) => {
            if !(hi > lo && lo > 0.0) || n < 2 {
                return Err(bad("sweep.eps_range", "needs largest > smallest > 0 and count >= 2"));
            }
            geometric_grid(hi, lo, n)
        }
        _ => return Err(bad("sweep", "give either eps_grid, or eps_range together with count")),
    };
    if grid.len() < 4 || grid.iter().any(|e| !(*e > 0.0)) || grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(bad("sweep.eps_grid", "needs at least 4 positive, strictly decreasing values"));
    }
    Ok(grid)
}
