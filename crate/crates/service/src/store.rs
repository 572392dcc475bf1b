//! Saved scenarios, one run directory per name under `<data>/scenarios`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use gate_core::io::{self, RunManifest, RunSummary, TrajectoryTable};
use gate_core::planner::Trajectory;
use gate_core::{Mode, Result};
use serde::Serialize;

use crate::jobs::JobOutput;

#[derive(Clone, Debug, Serialize)]
pub struct Scenario {
    pub name: String,
    pub manifest: RunManifest,
    pub trajectory: TrajectoryTable,
    #[serde(skip)]
    pub trajectories: Vec<Trajectory>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioEntry {
    pub name: String,
    pub run_id: String,
    pub mode: Mode,
    pub summary: RunSummary,
}

pub struct ScenarioStore {
    root: PathBuf,
    scenarios: BTreeMap<String, Scenario>,
}

/// Names double as directory names.
pub fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 64
        && !name.starts_with('.')
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

fn load(name: &str, dir: &Path) -> Result<Scenario> {
    let run = io::read_run(dir)?;
    Ok(Scenario {
        name: name.to_string(),
        trajectory: io::trajectory_table(&run.trajectories),
        manifest: run.manifest,
        trajectories: run.trajectories,
    })
}

impl ScenarioStore {
    /// Opens the store, loading every complete scenario directory.
    pub fn open(data_dir: &Path) -> Result<Self> {
        let root = data_dir.join("scenarios");
        fs::create_dir_all(&root)?;
        let mut scenarios = BTreeMap::new();
        for entry in fs::read_dir(&root)? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if !valid_name(&name) || !entry.path().is_dir() {
                continue;
            }
            match load(&name, &entry.path()) {
                Ok(s) => {
                    scenarios.insert(name, s);
                }
                Err(e) => tracing::warn!(%name, error = %e, "skipping unreadable scenario"),
            }
        }
        Ok(ScenarioStore { root, scenarios })
    }

    pub fn get(&self, name: &str) -> Option<&Scenario> {
        self.scenarios.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.scenarios.contains_key(name)
    }

    pub fn list(&self) -> Vec<ScenarioEntry> {
        self.scenarios
            .values()
            .map(|s| ScenarioEntry {
                name: s.name.clone(),
                run_id: s.manifest.run_id.clone(),
                mode: s.manifest.mode,
                summary: s.manifest.summary.clone(),
            })
            .collect()
    }

    /// Writes the run and serves it back from disk, so a restarted service
    /// returns the same document.
    pub fn save(&mut self, name: &str, output: &JobOutput) -> Result<&Scenario> {
        let dir = self.root.join(name);
        io::write_run(&dir, &output.manifest, &output.plan, &output.diagnostics)?;
        let scenario = load(name, &dir)?;
        Ok(self.scenarios.entry(name.to_string()).or_insert(scenario))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names() {
        for ok in ["a", "det-2024", "run_1.v2"] {
            assert!(valid_name(ok), "{ok}");
        }
        for bad in ["", ".hidden", "..", "a/b", "a b", &"x".repeat(65)] {
            assert!(!valid_name(bad), "{bad}");
        }
    }
}
