use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{DatasetError, Modality, Violation};

const SECONDS_PER_HOUR: f64 = 3600.0;

/// One collected demonstration; times are wall-clock seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionRecord {
    pub episode_id: String,
    pub operator: String,
    pub task: String,
    pub modality: Modality,
    pub success: bool,
    pub start_s: f64,
    pub end_s: f64,
}

impl CollectionRecord {
    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CollectionLog {
    pub records: Vec<CollectionRecord>,
}

impl CollectionLog {
    pub fn new(records: Vec<CollectionRecord>) -> Result<Self, DatasetError> {
        let log = Self { records };
        log.validate()?;
        Ok(log)
    }

    /// Ranges must be ordered and must not overlap for the same operator.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let mut by_operator: HashMap<&str, Vec<&CollectionRecord>> = HashMap::new();
        for r in &self.records {
            if !(r.start_s.is_finite() && r.end_s.is_finite()) || r.end_s < r.start_s {
                return Err(DatasetError::invariant(
                    Violation::NonPositiveDuration,
                    format!("episode {} ends before it starts", r.episode_id),
                ));
            }
            by_operator.entry(&r.operator).or_default().push(r);
        }
        for (op, mut recs) in by_operator {
            recs.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
            if let Some(w) = recs.windows(2).find(|w| w[1].start_s < w[0].end_s) {
                return Err(DatasetError::invariant(
                    Violation::OperatorOverlap,
                    format!("operator {op}: episodes {} and {} overlap", w[0].episode_id, w[1].episode_id),
                ));
            }
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, DatasetError> {
        Self::new(read_records(r)?)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), DatasetError> {
        write_records(&self.records, w)
    }
}

/// One autonomous policy rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionRecord {
    pub task: String,
    pub success: bool,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExecutionLog {
    pub records: Vec<ExecutionRecord>,
}

impl ExecutionLog {
    pub fn new(records: Vec<ExecutionRecord>) -> Result<Self, DatasetError> {
        let log = Self { records };
        log.validate()?;
        Ok(log)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        match self.records.iter().position(|r| !(r.duration_s > 0.0 && r.duration_s.is_finite())) {
            Some(i) => Err(DatasetError::invariant(
                Violation::NonPositiveDuration,
                format!("trial {i} has duration {}", self.records[i].duration_s),
            )),
            None => Ok(()),
        }
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, DatasetError> {
        Self::new(read_records(r)?)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), DatasetError> {
        write_records(&self.records, w)
    }
}

fn csv_err(e: csv::Error) -> DatasetError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    DatasetError::Parse {
        line,
        message: e.to_string(),
    }
}

fn read_records<T: for<'de> Deserialize<'de>, R: Read>(r: R) -> Result<Vec<T>, DatasetError> {
    csv::Reader::from_reader(r)
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(csv_err)
}

fn write_records<T: Serialize, W: Write>(records: &[T], w: W) -> Result<(), DatasetError> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in records {
        wtr.serialize(r).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| DatasetError::Parse {
        line: 0,
        message: e.to_string(),
    })
}

fn per_hour(successes: usize, seconds: f64, what: &str) -> Result<f64, DatasetError> {
    if !(seconds > 0.0) {
        return Err(DatasetError::Metric(format!("{what} has zero total duration")));
    }
    Ok(successes as f64 / (seconds / SECONDS_PER_HOUR))
}

/// Successful episodes per logged hour for one modality and task.
pub fn collection_throughput(log: &CollectionLog, modality: Modality, task: &str) -> Result<f64, DatasetError> {
    let recs: Vec<_> = log
        .records
        .iter()
        .filter(|r| r.modality == modality && r.task == task)
        .collect();
    if recs.is_empty() {
        return Err(DatasetError::Metric(format!("no {modality} records for task {task:?}")));
    }
    let seconds: f64 = recs.iter().map(|r| r.duration()).sum();
    let successes = recs.iter().filter(|r| r.success).count();
    per_hour(successes, seconds, "collection log")
}

/// Successful autonomous completions per hour of execution for one task.
pub fn effective_throughput(exec: &ExecutionLog, task: &str) -> Result<f64, DatasetError> {
    let recs: Vec<_> = exec.records.iter().filter(|r| r.task == task).collect();
    if recs.is_empty() {
        return Err(DatasetError::Metric(format!("no execution records for task {task:?}")));
    }
    let seconds: f64 = recs.iter().map(|r| r.duration_s).sum();
    let successes = recs.iter().filter(|r| r.success).count();
    per_hour(successes, seconds, "execution log")
}
