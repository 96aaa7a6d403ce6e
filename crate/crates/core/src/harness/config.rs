//! TOML run configuration and sweep grids.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basis::HpMode;
use crate::error::{Error, Result};
use crate::protocol::Variant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    /// One heralded step from the ideal `(m−1)` state.
    Step,
    /// Chained steps up to `m` excitations.
    Accumulate,
    /// Single-excitation bandgap transfer.
    Bandgap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Jsonl,
}

/// Physical parameters, all optional so that files and flags can be layered.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSet {
    #[serde(rename = "N")]
    pub n_atoms: Option<u32>,
    pub m: Option<u32>,
    pub p1d: Option<f64>,
    pub gamma_s_ratio: Option<f64>,
    pub omega: Option<f64>,
    pub xi: Option<f64>,
}

impl ParamSet {
    /// `other`'s values win where present.
    pub fn overlay(&self, other: &ParamSet) -> ParamSet {
        ParamSet {
            n_atoms: other.n_atoms.or(self.n_atoms),
            m: other.m.or(self.m),
            p1d: other.p1d.or(self.p1d),
            gamma_s_ratio: other.gamma_s_ratio.or(self.gamma_s_ratio),
            omega: other.omega.or(self.omega),
            xi: other.xi.or(self.xi),
        }
    }

    fn set(&mut self, name: AxisParam, value: f64) {
        match name {
            AxisParam::N => self.n_atoms = Some(value.round() as u32),
            AxisParam::M => self.m = Some(value.round() as u32),
            AxisParam::P1d => self.p1d = Some(value),
            AxisParam::GammaSRatio => self.gamma_s_ratio = Some(value),
            AxisParam::Omega => self.omega = Some(value),
            AxisParam::Xi => self.xi = Some(value),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisParam {
    N,
    #[serde(rename = "m")]
    M,
    #[serde(rename = "p1d")]
    P1d,
    #[serde(rename = "gamma_s_ratio")]
    GammaSRatio,
    #[serde(rename = "omega")]
    Omega,
    #[serde(rename = "xi")]
    Xi,
}

impl AxisParam {
    fn is_integer(&self) -> bool {
        matches!(self, AxisParam::N | AxisParam::M)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRange {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: AxisParam,
    pub values: Option<Vec<f64>>,
    pub log_range: Option<LogRange>,
}

impl Axis {
    pub fn resolve(&self) -> Result<Vec<f64>> {
        let raw = match (&self.values, &self.log_range) {
            (Some(v), None) => v.clone(),
            (None, Some(r)) => {
                if !(r.from > 0.0 && r.to > 0.0) || r.points == 0 {
                    return Err(Error::Config(format!(
                        "axis {:?}: log_range needs positive bounds and at least one point",
                        self.name
                    )));
                }
                if r.points == 1 {
                    vec![r.from]
                } else {
                    let (a, b) = (r.from.ln(), r.to.ln());
                    (0..r.points)
                        .map(|i| (a + (b - a) * i as f64 / (r.points - 1) as f64).exp())
                        .collect()
                }
            }
            _ => {
                return Err(Error::Config(format!(
                    "axis {:?}: give exactly one of `values` or `log_range`",
                    self.name
                )))
            }
        };
        if raw.is_empty() {
            return Err(Error::Config(format!("axis {:?} has no values", self.name)));
        }
        Ok(if self.name.is_integer() { raw.into_iter().map(f64::round).collect() } else { raw })
    }
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Option<Task>,
    pub variant: Option<Variant>,
    pub mode: Option<HpMode>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub refine_time: Option<bool>,
    #[serde(default)]
    pub fixed: ParamSet,
    #[serde(default)]
    pub axis: Vec<Axis>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// `flags` wins over the file for every field it sets.
    pub fn overlay(&self, flags: &RunConfig) -> RunConfig {
        RunConfig {
            task: flags.task.or(self.task),
            variant: flags.variant.or(self.variant),
            mode: flags.mode.or(self.mode),
            jobs: flags.jobs.or(self.jobs),
            out: flags.out.clone().or_else(|| self.out.clone()),
            format: flags.format.or(self.format),
            refine_time: flags.refine_time.or(self.refine_time),
            fixed: self.fixed.overlay(&flags.fixed),
            axis: if flags.axis.is_empty() { self.axis.clone() } else { flags.axis.clone() },
        }
    }

    /// Cartesian product of the axes over `fixed`, first axis slowest.
    pub fn grid(&self) -> Result<Vec<ParamSet>> {
        let mut points = vec![self.fixed.clone()];
        for axis in &self.axis {
            let values = axis.resolve()?;
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.set(axis.name, v);
                        q
                    })
                })
                .collect();
        }
        Ok(points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_grid() {
        let cfg = RunConfig::parse(
            r#"
task = "step"
variant = "pi-pulse"
mode = "hp-approx"
[fixed]
N = 500
p1d = 10.0
[[axis]]
name = "m"
values = [1, 2]
[[axis]]
name = "N"
log_range = { from = 100.0, to = 1000.0, points = 3 }
"#,
        )
        .unwrap();
        let grid = cfg.grid().unwrap();
        assert_eq!(grid.len(), 6);
        assert_eq!(grid[0].m, Some(1));
        assert_eq!(grid[0].n_atoms, Some(100));
        assert_eq!(grid[1].n_atoms, Some(316));
        assert_eq!(grid[3].m, Some(2));
        assert!(grid.iter().all(|p| p.p1d == Some(10.0)));
    }

    #[test]
    fn empty_axes_give_single_point() {
        let cfg = RunConfig::parse("[fixed]\nN = 10\nm = 1\n").unwrap();
        assert_eq!(cfg.grid().unwrap().len(), 1);
    }

    #[test]
    fn unknown_field_reports_location() {
        let err = RunConfig::parse("[fixed]\nN = 10\nbogus = 1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn flags_win() {
        let file = RunConfig::parse("jobs = 2\n[fixed]\nN = 10\nm = 1\n").unwrap();
        let flags = RunConfig { jobs: Some(8), fixed: ParamSet { m: Some(3), ..Default::default() }, ..Default::default() };
        let merged = file.overlay(&flags);
        assert_eq!(merged.jobs, Some(8));
        assert_eq!(merged.fixed.n_atoms, Some(10));
        assert_eq!(merged.fixed.m, Some(3));
    }
}
