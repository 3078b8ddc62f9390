//! TOML pipeline configuration.

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cof_core::cof_real::RealGenConfig;
use cof_core::cof_synth::GenerationPlan;
use cof_core::curate::DEFAULT_TARGET_ZERO_REF_FRACTION;
use cof_core::frame_align::{DEFAULT_FRAME_BUDGET, DEFAULT_MAX_DURATION_S};
use cof_core::scene_sim::SimConfig;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

/// Half-open seed range written `a..b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedRange(pub Range<u64>);

impl FromStr for SeedRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| format!("expected a seed range like 0..20, got {s:?}"))?;
        let a: u64 = a.trim().parse().map_err(|e| format!("bad range start {a:?}: {e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("bad range end {b:?}: {e}"))?;
        if a >= b {
            return Err(format!("empty seed range {s}"));
        }
        Ok(SeedRange(a..b))
    }
}

impl fmt::Display for SeedRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.0.start, self.0.end)
    }
}

impl Serialize for SeedRange {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SeedRange {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ClientKind {
    Replay,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignSection {
    pub max_duration_s: f64,
    pub frame_budget: usize,
}

impl Default for AlignSection {
    fn default() -> Self {
        AlignSection {
            max_duration_s: DEFAULT_MAX_DURATION_S,
            frame_budget: DEFAULT_FRAME_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub seeds: SeedRange,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection { seeds: SeedRange(0..20) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RealSection {
    /// Raw (unaligned) caption annotations. The real branch is skipped when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annotations: Option<PathBuf>,
    pub client: ClientKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixtures: Option<PathBuf>,
    pub model: String,
    pub temperature: f64,
    pub max_new_tokens: u32,
    pub max_in_flight: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instruction: Option<String>,
}

impl Default for RealSection {
    fn default() -> Self {
        let g = RealGenConfig::default();
        RealSection {
            annotations: None,
            client: ClientKind::Replay,
            fixtures: None,
            model: "llama-3.1-8b-instruct".into(),
            temperature: g.temperature,
            max_new_tokens: g.max_new_tokens,
            max_in_flight: g.max_in_flight,
            instruction: None,
        }
    }
}

impl RealSection {
    pub fn gen_config(&self) -> RealGenConfig {
        RealGenConfig {
            temperature: self.temperature,
            max_new_tokens: self.max_new_tokens,
            max_in_flight: self.max_in_flight,
            instruction: self.instruction.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurateSection {
    pub target_zero_ref_fraction: f64,
}

impl Default for CurateSection {
    fn default() -> Self {
        CurateSection {
            target_zero_ref_fraction: DEFAULT_TARGET_ZERO_REF_FRACTION,
        }
    }
}

/// Every section is optional; missing values take their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Master seed for template sampling and rebalancing.
    pub seed: u64,
    /// Output directory for `pipeline`, relative to the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub align: AlignSection,
    pub simulate: SimulateSection,
    pub scene: SimConfig,
    pub synth: GenerationPlan,
    pub real: RealSection,
    pub curate: CurateSection,
}

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), String> {
        check(
            self.align.max_duration_s.is_finite() && self.align.max_duration_s > 0.0,
            "align.max_duration_s must be positive",
        )?;
        check(self.align.frame_budget > 0, "align.frame_budget must be positive")?;
        self.scene.validate().map_err(|e| format!("scene: {e}"))?;
        check(
            self.synth.moving_epsilon.is_finite() && self.synth.moving_epsilon >= 0.0,
            "synth.moving_epsilon must be non-negative",
        )?;
        let f = self.curate.target_zero_ref_fraction;
        check((0.0..=1.0).contains(&f), "curate.target_zero_ref_fraction must lie in [0, 1]")?;
        let r = &self.real;
        check(r.temperature.is_finite() && r.temperature >= 0.0, "real.temperature must be non-negative")?;
        check(r.max_new_tokens > 0, "real.max_new_tokens must be positive")?;
        check(r.max_in_flight > 0, "real.max_in_flight must be positive")?;
        check(!r.model.trim().is_empty(), "real.model must not be empty")?;
        if let Some(instr) = &r.instruction {
            check(!instr.trim().is_empty(), "real.instruction must not be empty")?;
        }
        if r.annotations.is_some() && r.client == ClientKind::Replay {
            check(r.fixtures.is_some(), "real.fixtures is required for the replay client")?;
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads and validates a config file. Relative paths inside it are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|m| CliError::data(path.display().to_string(), m))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.output_dir.as_mut().map(resolve);
        cfg.real.annotations.as_mut().map(resolve);
        cfg.real.fixtures.as_mut().map(resolve);
        Ok(cfg)
    }

    /// Canonical serialization; the config hash is taken over this text.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_values() {
        let cfg = PipelineConfig::from_toml("").unwrap();
        assert_eq!(cfg.align.max_duration_s, 30.0);
        assert_eq!(cfg.align.frame_budget, 30);
        assert_eq!(cfg.curate.target_zero_ref_fraction, 0.15);
        assert_eq!(cfg.real.temperature, 0.7);
        assert_eq!(cfg.real.max_new_tokens, 1024);
        assert_eq!(cfg.real.max_in_flight, 4);
        assert_eq!(cfg.simulate.seeds, SeedRange(0..20));
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            "[align]\nframe_budget = 0",
            "[curate]\ntarget_zero_ref_fraction = 1.5",
            "[real]\ninstruction = \"  \"",
            "[simulate]\nseeds = \"5..5\"",
            "bogus = 1",
            "[real]\nannotations = \"a.jsonl\"",
        ] {
            assert!(PipelineConfig::from_toml(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn canonical_round_trip() {
        let cfg = PipelineConfig::from_toml("seed = 9\n[synth]\nrelative_distance = false\n").unwrap();
        assert_eq!(PipelineConfig::from_toml(&cfg.canonical()).unwrap(), cfg);
    }

    #[test]
    fn seed_range_parse() {
        assert_eq!("3..7".parse::<SeedRange>().unwrap(), SeedRange(3..7));
        assert!("7".parse::<SeedRange>().is_err());
        assert!("9..2".parse::<SeedRange>().is_err());
    }
}
