use std::path::Path;

use asmkit::config::KvConfig;
use asmkit::dataio::SynthParams;
use asmkit::manualcam::ViewConfig;
use asmkit::metrics::PartThreshold;
use asmkit::simulator::SimConfig;
use serde::{Deserialize, Serialize};

/// Everything a `--config` file can set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub sim: SimConfig,
    pub cd_threshold: f64,
    pub view: ViewConfig,
    pub synth: SynthParams,
    /// Iteration cap shared by the search planners.
    pub max_iterations: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            cd_threshold: PartThreshold::default().cd_threshold,
            view: ViewConfig::default(),
            synth: SynthParams::default(),
            max_iterations: asmkit::planners::PlannerBudget::default().max_iterations,
        }
    }
}

const OWN_KEYS: [&str; 9] = [
    "cd_threshold",
    "resolution",
    "lambda_vis",
    "clearance",
    "points_per_part",
    "stack_count",
    "steps",
    "plan_timeout",
    "max_iterations",
];

impl Settings {
    pub fn from_kv(kv: &KvConfig) -> asmkit::Result<Self> {
        let known: Vec<&str> = SimConfig::KEYS.iter().chain(OWN_KEYS.iter()).copied().collect();
        kv.ensure_known(&known)?;
        let mut out = Self {
            sim: SimConfig::from_kv(kv)?,
            ..Self::default()
        };
        if let Some(v) = kv.get_f64("cd_threshold")? {
            out.cd_threshold = PartThreshold::new(v)?.cd_threshold;
        }
        if let Some(v) = kv.get_usize("resolution")? {
            out.view.resolution = v;
        }
        if let Some(v) = kv.get_f64("lambda_vis")? {
            out.view.lambda_vis = v;
        }
        out.view.validate()?;
        if let Some(v) = kv.get_f64("clearance")? {
            out.synth.clearance = v;
        }
        if let Some(v) = kv.get_f64("plan_timeout")? {
            out.synth.plan_timeout = v;
        }
        for (key, slot) in [
            ("points_per_part", &mut out.synth.points_per_part),
            ("stack_count", &mut out.synth.stack_count),
            ("steps", &mut out.synth.steps),
            ("max_iterations", &mut out.max_iterations),
        ] {
            if let Some(v) = kv.get_usize(key)? {
                *slot = v;
            }
        }
        Ok(out)
    }

    pub fn threshold(&self) -> PartThreshold {
        PartThreshold {
            cd_threshold: self.cd_threshold,
        }
    }
}

/// Global flags shared by every command.
#[derive(Debug, Clone, Default)]
pub struct Context {
    pub settings: Settings,
    pub seed: u64,
    /// Put wall-clock times into manifests.
    pub timings: bool,
}

impl Context {
    pub fn new(settings: Settings, seed: u64) -> Self {
        Self {
            settings,
            seed,
            timings: false,
        }
    }

    pub fn from_config_file(path: Option<&Path>, seed: u64) -> anyhow::Result<Self> {
        let settings = match path {
            Some(p) => Settings::from_kv(&KvConfig::load(p)?)?,
            None => Settings::default(),
        };
        Ok(Self::new(settings, seed))
    }
}
