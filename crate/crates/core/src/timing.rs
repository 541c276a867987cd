//! Per-stage wall-clock instrumentation.

use std::time::Instant;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Resample,
    Fps,
    Repair,
    Extract,
    Laplacian,
    Eigens,
    FmapInit,
    Zoomout,
    Prolongation,
    NnRecovery,
}

impl Stage {
    pub const ALL: [Stage; 10] = [
        Stage::Resample,
        Stage::Fps,
        Stage::Repair,
        Stage::Extract,
        Stage::Laplacian,
        Stage::Eigens,
        Stage::FmapInit,
        Stage::Zoomout,
        Stage::Prolongation,
        Stage::NnRecovery,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Resample => "resample",
            Stage::Fps => "fps",
            Stage::Repair => "repair",
            Stage::Extract => "extract",
            Stage::Laplacian => "laplacian",
            Stage::Eigens => "eigens",
            Stage::FmapInit => "fmap_init",
            Stage::Zoomout => "zoomout",
            Stage::Prolongation => "prolongation",
            Stage::NnRecovery => "nn_recovery",
        }
    }

    pub fn from_name(s: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|st| st.name() == s)
    }
}

/// Stage durations in seconds, in the order they were recorded.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Timings {
    pub entries: Vec<(Stage, f64)>,
}

impl Timings {
    pub fn time<T>(&mut self, stage: Stage, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.entries.push((stage, start.elapsed().as_secs_f64()));
        out
    }

    pub fn record(&mut self, stage: Stage, seconds: f64) {
        self.entries.push((stage, seconds));
    }

    pub fn extend(&mut self, other: Timings) {
        self.entries.extend(other.entries);
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn stage_total(&self, stage: Stage) -> f64 {
        self.entries.iter().filter(|e| e.0 == stage).map(|e| e.1).sum()
    }
}
