use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobStatus {
    pub id: String,
    pub state: JobState,
    /// In `[0, 1]`; 1 once done.
    pub progress: f64,
    pub stage: Option<String>,
    pub layout_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// In-memory job table. Jobs do not survive a restart; their layouts do.
#[derive(Default)]
pub struct JobRegistry {
    next: AtomicU64,
    jobs: Mutex<BTreeMap<String, JobStatus>>,
}

impl JobRegistry {
    pub fn create(&self, layout_id: &str) -> JobStatus {
        let n = self.next.fetch_add(1, Ordering::Relaxed) + 1;
        let status = JobStatus {
            id: format!("job-{n}"),
            state: JobState::Queued,
            progress: 0.0,
            stage: None,
            layout_id: layout_id.to_string(),
            error: None,
        };
        self.jobs.lock().expect("job lock").insert(status.id.clone(), status.clone());
        status
    }

    pub fn get(&self, id: &str) -> Option<JobStatus> {
        self.jobs.lock().expect("job lock").get(id).cloned()
    }

    /// True while some job for `layout_id` is queued or running.
    pub fn busy(&self, layout_id: &str) -> bool {
        self.jobs
            .lock()
            .expect("job lock")
            .values()
            .any(|j| j.layout_id == layout_id && matches!(j.state, JobState::Queued | JobState::Running))
    }

    pub fn update(&self, id: &str, f: impl FnOnce(&mut JobStatus)) {
        if let Some(j) = self.jobs.lock().expect("job lock").get_mut(id) {
            f(j);
        }
    }

    pub fn progress(&self, id: &str, stage: &str, fraction: f64) {
        self.update(id, |j| {
            j.state = JobState::Running;
            j.stage = Some(stage.to_string());
            j.progress = fraction.clamp(0.0, 1.0);
        });
    }

    pub fn finish(&self, id: &str, result: Result<(), String>) {
        self.update(id, |j| match result {
            Ok(()) => {
                j.state = JobState::Done;
                j.progress = 1.0;
                j.stage = None;
            }
            Err(e) => {
                j.state = JobState::Failed;
                j.error = Some(e);
            }
        });
    }
}
