//! Job registry and the bounded solver pool.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use gate_core::io::{self, RunManifest};
use gate_core::params::Violation;
use gate_core::planner::optimizer::IterationRecord;
use gate_core::planner::Trajectory;
use gate_core::{solve_with, Mode, ParameterSet, SolverSettings};
use serde::Serialize;
use tokio::sync::{watch, Semaphore};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running {
        iteration: usize,
        value: Option<f64>,
    },
    Done,
    Failed {
        reason: String,
    },
}

impl JobStatus {
    pub fn is_terminal(&self) -> bool {
        matches!(self, JobStatus::Done | JobStatus::Failed { .. })
    }
}

/// Artefacts of a finished solve. Never modified once set.
#[derive(Debug)]
pub struct JobOutput {
    pub manifest: RunManifest,
    pub plan: Vec<Trajectory>,
    pub diagnostics: Vec<IterationRecord>,
}

#[derive(Debug)]
struct JobState {
    status: JobStatus,
    records: Vec<IterationRecord>,
    output: Option<Arc<JobOutput>>,
}

#[derive(Debug)]
pub struct Job {
    pub id: String,
    pub mode: Mode,
    pub params: ParameterSet,
    pub settings: SolverSettings,
    pub warnings: Vec<Violation>,
    state: Mutex<JobState>,
    /// Bumped on every state change; progress streams wait on it.
    version: watch::Sender<u64>,
}

impl Job {
    fn update(&self, f: impl FnOnce(&mut JobState)) {
        f(&mut self.state.lock().expect("job state poisoned"));
        self.version.send_modify(|v| *v += 1);
    }

    pub fn status(&self) -> JobStatus {
        self.state
            .lock()
            .expect("job state poisoned")
            .status
            .clone()
    }

    pub fn output(&self) -> Option<Arc<JobOutput>> {
        self.state
            .lock()
            .expect("job state poisoned")
            .output
            .clone()
    }

    /// Iteration records from `from` on, and whether the job has finished.
    pub fn records_since(&self, from: usize) -> (Vec<IterationRecord>, bool) {
        let s = self.state.lock().expect("job state poisoned");
        let tail = s.records.get(from..).unwrap_or_default().to_vec();
        (tail, s.status.is_terminal())
    }

    pub fn subscribe(&self) -> watch::Receiver<u64> {
        self.version.subscribe()
    }

    fn record(&self, r: &IterationRecord) {
        self.update(|s| {
            s.records.push(*r);
            s.status = JobStatus::Running {
                iteration: r.iteration,
                value: Some(r.value),
            };
        });
    }
}

/// All jobs of the session plus the worker permits.
pub struct Registry {
    jobs: Mutex<HashMap<String, Arc<Job>>>,
    next: AtomicU64,
    pool: Arc<Semaphore>,
}

impl Registry {
    pub fn new(workers: usize) -> Self {
        Registry {
            jobs: Mutex::new(HashMap::new()),
            next: AtomicU64::new(1),
            pool: Arc::new(Semaphore::new(workers.max(1))),
        }
    }

    pub fn get(&self, id: &str) -> Option<Arc<Job>> {
        self.jobs
            .lock()
            .expect("registry poisoned")
            .get(id)
            .cloned()
    }

    pub fn len(&self) -> usize {
        self.jobs.lock().expect("registry poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Registers a job and queues it. Waiting jobs acquire workers in
    /// submission order.
    pub fn submit(
        &self,
        params: ParameterSet,
        mode: Mode,
        settings: SolverSettings,
        warnings: Vec<Violation>,
    ) -> Arc<Job> {
        let n = self.next.fetch_add(1, Ordering::Relaxed);
        let job = Arc::new(Job {
            id: format!("job-{n:06}"),
            mode,
            params,
            settings,
            warnings,
            state: Mutex::new(JobState {
                status: JobStatus::Queued,
                records: Vec::new(),
                output: None,
            }),
            version: watch::channel(0).0,
        });
        self.jobs
            .lock()
            .expect("registry poisoned")
            .insert(job.id.clone(), job.clone());

        let pool = self.pool.clone();
        let worker = job.clone();
        tokio::spawn(async move {
            let Ok(_permit) = pool.acquire_owned().await else {
                return;
            };
            worker.update(|s| {
                s.status = JobStatus::Running {
                    iteration: 0,
                    value: None,
                }
            });
            let solver = worker.clone();
            let result = tokio::task::spawn_blocking(move || run(&solver)).await;
            let outcome = match result {
                Ok(r) => r,
                Err(e) => Err(format!("solver task aborted: {e}")),
            };
            match outcome {
                Ok(out) => {
                    tracing::info!(job = %worker.id, "job done");
                    worker.update(|s| {
                        s.output = Some(Arc::new(out));
                        s.status = JobStatus::Done;
                    });
                }
                Err(reason) => {
                    tracing::warn!(job = %worker.id, %reason, "job failed");
                    worker.update(|s| s.status = JobStatus::Failed { reason });
                }
            }
        });
        job
    }
}

fn run(job: &Job) -> Result<JobOutput, String> {
    let started = io::unix_now();
    let solution = solve_with(&job.params, job.mode, &job.settings, None, &mut |r| {
        job.record(r)
    })
    .map_err(|e| e.to_string())?;
    let manifest = RunManifest::new(&job.params, &solution, started);
    let diagnostics = job.records_since(0).0;
    Ok(JobOutput {
        manifest,
        plan: solution.plan(job.params.tau_plan),
        diagnostics,
    })
}
