//! Stage latencies, per-operation energies, the component area/power table
//! and run comparisons.
//!
//! All quantities are carried as integers: latencies in picoseconds,
//! energies in picojoules, power and area in units of 10^-4 W / mm^2. This
//! keeps sums exact and reports byte-identical across platforms.

mod compare;
mod summary;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

pub use compare::{compare, ComparisonReport};
pub use summary::{area_power_summary, AreaPowerSummary, ModuleSummary};

use crate::pipeline::{Mode, Stage, WorkCounts};

pub const COST_SCHEMA: u32 = 1;
pub const DEFAULT_COST_TOML: &str = include_str!("../../config/default_cost.toml");

#[derive(Debug, Error)]
pub enum CostError {
    #[error("cannot read cost config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cost config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported cost_schema {0} (expected {COST_SCHEMA})")]
    Schema(u32),
    #[error("missing stage {0}")]
    MissingStage(&'static str),
    #[error("{field} must be a finite number >= {min}, got {value}")]
    Invalid { field: String, min: f64, value: f64 },
    #[error("component {0:?} has no module tag")]
    MissingModule(String),
    #[error("no components to summarize")]
    NoComponents,
    #[error("reports describe different datasets ({0} vs {1} reads)")]
    DatasetMismatch(u64, u64),
    #[error("cannot form a ratio: {0} is zero in one report only")]
    ZeroRatio(&'static str),
}

/// Fixed-point decimal with four fractional digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Dec4(pub i64);

impl Dec4 {
    pub const SCALE: i64 = 10_000;

    /// Rounds half away from zero to `decimals` fractional digits.
    pub fn round_to(self, decimals: u32) -> Dec4 {
        let step = 10i64.pow(4 - decimals.min(4));
        let half = step / 2;
        let r = if self.0 >= 0 {
            (self.0 + half) / step
        } else {
            (self.0 - half) / step
        };
        Dec4(r * step)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / Self::SCALE as f64
    }
}

impl std::ops::Add for Dec4 {
    type Output = Dec4;
    fn add(self, o: Dec4) -> Dec4 {
        Dec4(self.0 + o.0)
    }
}

impl std::iter::Sum for Dec4 {
    fn sum<I: Iterator<Item = Dec4>>(iter: I) -> Dec4 {
        iter.fold(Dec4(0), |a, b| a + b)
    }
}

impl fmt::Display for Dec4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let v = self.0.unsigned_abs();
        let (int, frac) = (v / 10_000, v % 10_000);
        let frac = format!("{frac:04}");
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            write!(f, "{sign}{int}")
        } else {
            write!(f, "{sign}{int}.{frac}")
        }
    }
}

impl serde::Serialize for Dec4 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

/// Cost of a stage whose jobs are priced per chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageCost {
    pub latency_ps: u64,
    pub energy_pj: u64,
    pub units: usize,
}

/// Cost of a stage priced per base (ALIGN) or per byte (XFER).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateCost {
    pub ps_per_unit: u64,
    pub pj_per_unit: u64,
    pub units: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub name: String,
    pub module: String,
    pub power: Dec4,
    pub area: Dec4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    pub bc: StageCost,
    pub cqs: StageCost,
    pub seed: StageCost,
    pub chain: StageCost,
    pub align: RateCost,
    pub xfer: RateCost,
    pub raw_signal_inflation: f64,
    /// Raw-signal energy per basecalled base (2 bytes x inflation).
    pub signal_pj_per_base: u64,
    pub components: Vec<Component>,
    pub module_names: BTreeMap<String, String>,
    pub summary_decimals: u32,
}

impl CostModel {
    pub fn units(&self, stage: Stage) -> usize {
        match stage {
            Stage::Bc => self.bc.units,
            Stage::Cqs => self.cqs.units,
            Stage::Seed => self.seed.units,
            Stage::Chain => self.chain.units,
            Stage::Align => self.align.units,
            Stage::Xfer => self.xfer.units,
        }
    }

    /// Service time in whole nanoseconds (rounded up) of a job carrying
    /// `amount` work: 1 for chunk jobs, bases for ALIGN, bytes for XFER.
    pub fn service_ns(&self, stage: Stage, amount: u64) -> u64 {
        let ps = match stage {
            Stage::Bc => self.bc.latency_ps,
            Stage::Cqs => self.cqs.latency_ps,
            Stage::Seed => self.seed.latency_ps,
            Stage::Chain => self.chain.latency_ps,
            Stage::Align => self.align.ps_per_unit,
            Stage::Xfer => self.xfer.ps_per_unit,
        };
        (ps * amount).div_ceil(1000)
    }

    pub fn with_units(mut self, units: usize) -> Self {
        self.bc.units = units;
        self.cqs.units = units;
        self.seed.units = units;
        self.chain.units = units;
        self.align.units = units;
        self.xfer.units = units;
        self
    }
}

impl Default for CostModel {
    fn default() -> Self {
        parse_cost_config(DEFAULT_COST_TOML).expect("shipped cost config is valid")
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    cost_schema: u32,
    summary_decimals: Option<u32>,
    raw_signal_inflation: Option<f64>,
    signal_nj_per_byte: Option<f64>,
    stages: RawStages,
    #[serde(default)]
    module_names: BTreeMap<String, String>,
    #[serde(default)]
    components: Vec<RawComponent>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RawStages {
    BC: Option<RawChunkStage>,
    CQS: Option<RawChunkStage>,
    SEED: Option<RawChunkStage>,
    CHAIN: Option<RawChunkStage>,
    ALIGN: Option<RawAlign>,
    XFER: Option<RawXfer>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChunkStage {
    latency_ns: f64,
    energy_nj: f64,
    units: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlign {
    ns_per_base: f64,
    nj_per_base: f64,
    units: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawXfer {
    ns_per_byte: f64,
    nj_per_byte: f64,
    units: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawComponent {
    name: String,
    module: Option<String>,
    power_w: f64,
    area_mm2: f64,
}

fn check(field: impl Into<String>, value: f64, min: f64) -> Result<f64, CostError> {
    if value.is_finite() && value >= min {
        Ok(value)
    } else {
        Err(CostError::Invalid {
            field: field.into(),
            min,
            value,
        })
    }
}

fn milli(field: String, value: f64) -> Result<u64, CostError> {
    Ok((check(field, value, 0.0)? * 1000.0).round() as u64)
}

fn units(field: String, u: Option<usize>) -> Result<usize, CostError> {
    match u {
        None => Ok(1),
        Some(0) => Err(CostError::Invalid {
            field,
            min: 1.0,
            value: 0.0,
        }),
        Some(n) => Ok(n),
    }
}

fn chunk_stage(name: &'static str, raw: Option<RawChunkStage>) -> Result<StageCost, CostError> {
    let raw = raw.ok_or(CostError::MissingStage(name))?;
    Ok(StageCost {
        latency_ps: milli(format!("stages.{name}.latency_ns"), raw.latency_ns)?,
        energy_pj: milli(format!("stages.{name}.energy_nj"), raw.energy_nj)?,
        units: units(format!("stages.{name}.units"), raw.units)?,
    })
}

pub fn parse_cost_config(text: &str) -> Result<CostModel, CostError> {
    let raw: RawConfig = toml::from_str(text)?;
    if raw.cost_schema != COST_SCHEMA {
        return Err(CostError::Schema(raw.cost_schema));
    }
    let s = raw.stages;
    let bc = chunk_stage("BC", s.BC)?;
    let cqs = chunk_stage("CQS", s.CQS)?;
    let seed = chunk_stage("SEED", s.SEED)?;
    let chain = chunk_stage("CHAIN", s.CHAIN)?;
    let a = s.ALIGN.ok_or(CostError::MissingStage("ALIGN"))?;
    let align = RateCost {
        ps_per_unit: milli("stages.ALIGN.ns_per_base".into(), a.ns_per_base)?,
        pj_per_unit: milli("stages.ALIGN.nj_per_base".into(), a.nj_per_base)?,
        units: units("stages.ALIGN.units".into(), a.units)?,
    };
    let x = s.XFER.unwrap_or(RawXfer {
        ns_per_byte: 0.1,
        nj_per_byte: 0.0,
        units: None,
    });
    let xfer = RateCost {
        ps_per_unit: milli("stages.XFER.ns_per_byte".into(), x.ns_per_byte)?,
        pj_per_unit: milli("stages.XFER.nj_per_byte".into(), x.nj_per_byte)?,
        units: units("stages.XFER.units".into(), x.units)?,
    };
    let inflation = check(
        "raw_signal_inflation",
        raw.raw_signal_inflation.unwrap_or(10.0),
        1.0,
    )?;
    let signal = check(
        "signal_nj_per_byte",
        raw.signal_nj_per_byte.unwrap_or(0.0),
        0.0,
    )?;
    let decimals = raw.summary_decimals.unwrap_or(1);
    if decimals > 4 {
        return Err(CostError::Invalid {
            field: "summary_decimals".into(),
            min: 0.0,
            value: decimals as f64,
        });
    }
    let components = raw
        .components
        .into_iter()
        .map(|c| {
            let module = c
                .module
                .ok_or_else(|| CostError::MissingModule(c.name.clone()))?;
            let dec = |field: &str, v: f64| -> Result<Dec4, CostError> {
                let v = check(format!("components[{}].{field}", c.name), v, 0.0)?;
                Ok(Dec4((v * Dec4::SCALE as f64).round() as i64))
            };
            Ok(Component {
                power: dec("power_w", c.power_w)?,
                area: dec("area_mm2", c.area_mm2)?,
                name: c.name,
                module,
            })
        })
        .collect::<Result<Vec<_>, CostError>>()?;
    Ok(CostModel {
        bc,
        cqs,
        seed,
        chain,
        align,
        xfer,
        raw_signal_inflation: inflation,
        signal_pj_per_base: (2.0 * inflation * signal * 1000.0).round() as u64,
        components,
        module_names: raw.module_names,
        summary_decimals: decimals,
    })
}

pub fn load_cost_config(path: impl AsRef<Path>) -> Result<CostModel, CostError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CostError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_cost_config(&text)
}

/// Total energy in picojoules. The transfer term applies to DECOUPLED only.
pub fn energy_total(w: &WorkCounts, c: &CostModel, mode: Mode) -> u64 {
    let mut pj = w.chunks_basecalled * c.bc.energy_pj
        + w.chunks_cqs * c.cqs.energy_pj
        + w.chunks_seeded * c.seed.energy_pj
        + w.chunks_chained * c.chain.energy_pj
        + w.bases_aligned * c.align.pj_per_unit
        + w.bases_basecalled * c.signal_pj_per_base;
    if mode == Mode::Decoupled {
        pj += w.bytes_transferred * c.xfer.pj_per_unit;
    }
    pj
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_loads() {
        let c = CostModel::default();
        assert_eq!(c.bc.latency_ps, 1_000_000);
        assert_eq!(c.cqs.latency_ps, 10_000);
        assert_eq!(c.seed.latency_ps, 200_000);
        assert_eq!(c.chain.latency_ps, 300_000);
        assert_eq!(c.align.ps_per_unit, 1000);
        assert_eq!(c.xfer.ps_per_unit, 100);
        assert_eq!(c.components.len(), 6);
        assert_eq!(c.components[1].power, Dec4(3070));
        assert_eq!(c.components[1].area, Dec4(256));
        assert_eq!(c.service_ns(Stage::Xfer, 25), 3);
        assert_eq!(c.service_ns(Stage::Align, 25), 25);
    }

    fn without(section: &str) -> String {
        let mut out = String::new();
        let mut skip = false;
        for line in DEFAULT_COST_TOML.lines() {
            if line.starts_with('[') {
                skip = line == section;
            }
            if !skip {
                out.push_str(line);
                out.push('\n');
            }
        }
        out
    }

    #[test]
    fn missing_align() {
        let err = parse_cost_config(&without("[stages.ALIGN]")).unwrap_err();
        assert_eq!(err.to_string(), "missing stage ALIGN");
        assert!(parse_cost_config(&without("[stages.XFER]")).is_ok());
    }

    #[test]
    fn negative_latency() {
        let text = DEFAULT_COST_TOML.replace("latency_ns = 1000", "latency_ns = -1");
        let err = parse_cost_config(&text).unwrap_err();
        assert!(
            matches!(err, CostError::Invalid { ref field, .. } if field == "stages.BC.latency_ns"),
            "{err}"
        );
    }

    #[test]
    fn unknown_key_and_schema() {
        let text = DEFAULT_COST_TOML.replace("units = 1\n", "units = 1\nspeed = 3\n");
        assert!(matches!(parse_cost_config(&text), Err(CostError::Parse(_))));
        let text = DEFAULT_COST_TOML.replace("cost_schema = 1", "cost_schema = 2");
        assert!(matches!(
            parse_cost_config(&text),
            Err(CostError::Schema(2))
        ));
        let text = DEFAULT_COST_TOML.replace("units = 1\n", "units = 0\n");
        assert!(matches!(
            parse_cost_config(&text),
            Err(CostError::Invalid { .. })
        ));
    }

    #[test]
    fn component_needs_module() {
        let text = DEFAULT_COST_TOML.replace("module = \"controller\"\n", "");
        assert!(
            matches!(parse_cost_config(&text), Err(CostError::MissingModule(n)) if n == "Controller")
        );
    }

    #[test]
    fn dec4_display_and_rounding() {
        assert_eq!(Dec4(1_472_530).to_string(), "147.253");
        assert_eq!(Dec4(1_472_530).round_to(1), Dec4(1_473_000));
        assert_eq!(Dec4(1_145_460).round_to(1), Dec4(1_145_000));
        assert_eq!(Dec4(492_256).round_to(1).to_string(), "49.2");
        assert_eq!(Dec4(25).round_to(3), Dec4(30));
        assert_eq!(Dec4(-25).round_to(3), Dec4(-30));
        assert_eq!(Dec4(850_000).to_string(), "85");
    }

    fn counts() -> WorkCounts {
        WorkCounts {
            chunks_basecalled: 30,
            chunks_cqs: 30,
            chunks_seeded: 20,
            chunks_chained: 20,
            reads_aligned: 1,
            bases_basecalled: 9000,
            bases_aligned: 6000,
            bytes_transferred: 18_000,
            ..WorkCounts::default()
        }
    }

    #[test]
    fn energy_terms() {
        let c = CostModel::default();
        assert_eq!(energy_total(&WorkCounts::default(), &c, Mode::Cp), 0);
        let w = WorkCounts {
            chunks_basecalled: 10,
            ..WorkCounts::default()
        };
        let mut c5 = c.clone();
        c5.bc.energy_pj = 5000;
        assert_eq!(energy_total(&w, &c5, Mode::Cp), 50_000);

        let w = counts();
        let cp = energy_total(&w, &c, Mode::Cp);
        assert_eq!(
            cp,
            30 * 500_000 + 30 * 1000 + 20 * 20_000 + 20 * 30_000 + 6000 * 100
        );
        let dec = energy_total(&w, &c, Mode::Decoupled);
        assert_eq!(dec - cp, 18_000 * 50);
    }

    #[test]
    fn energy_is_linear() {
        let c = CostModel {
            signal_pj_per_base: 7,
            ..CostModel::default()
        };
        let w = counts();
        let mut w2 = w.clone();
        w2.add(&w);
        for mode in Mode::ALL {
            assert_eq!(energy_total(&w2, &c, mode), 2 * energy_total(&w, &c, mode));
        }
    }
}
