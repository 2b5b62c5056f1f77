// Copyright 2026 The policy-repair Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Corpus-scale experiment runner and report aggregation.
//!
//! For each policy, request size and prompt mode the runner loads (or
//! generates and persists) a request suite, repairs the policy, and writes
//! one JSON line per outcome. Both modes of a (policy, size) pair consume the
//! same persisted suite.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::RequestSpec;
use crate::generate::{generate_requests, GenConfig, ManifestEntry};
use crate::policy::{normalize_policy, Policy};
use crate::prompt::PromptMode;
use crate::repair::{repair_with, IterationRecord, RepairConfig, RepairOutcome, RepairStatus};
use crate::stats::{bin_accuracies, welch_ttest, Bins, TTest};
use crate::synth::{synthesizer_from_config, Synthesizer};

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("corpus contains no parseable policy")]
    EmptyCorpus,
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid batch configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed outcome record: {0}")]
    MalformedRecord(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BatchError + '_ {
    move |source| BatchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone)]
pub struct BatchConfig {
    pub sizes: Vec<usize>,
    pub rho: f64,
    pub seed: u64,
    pub modes: Vec<PromptMode>,
    /// Mode inside is overridden per run.
    pub repair: RepairConfig,
    pub output_dir: PathBuf,
    /// Pre-existing suites named `<stem>.n<size>.json` are used instead of generating.
    pub requests_dir: Option<PathBuf>,
    pub workers: usize,
    /// Global wall-clock budget; runs not started in time are recorded as failures.
    pub time_budget: Option<Duration>,
}

impl BatchConfig {
    pub fn new(output_dir: impl Into<PathBuf>) -> Self {
        BatchConfig {
            sizes: vec![10, 20, 30, 50],
            rho: 0.2,
            seed: 0,
            modes: vec![PromptMode::Base, PromptMode::FaultLocalization],
            repair: RepairConfig::default(),
            output_dir: output_dir.into(),
            requests_dir: None,
            workers: 4,
            time_budget: None,
        }
    }
}

/// One line of the outcomes file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub policy: String,
    pub request_size: usize,
    pub mode: PromptMode,
    pub status: RepairStatus,
    pub initial_accuracy_percent: f64,
    pub best_accuracy_percent: f64,
    pub iterations_used: usize,
    pub total_ms: f64,
    pub synth_ms: f64,
    pub validation_ms: f64,
    pub best_policy_digest: String,
    pub best_policy: serde_json::Value,
    pub trace: Vec<IterationRecord>,
}

impl OutcomeRecord {
    pub fn new(policy: &str, request_size: usize, mode: PromptMode, outcome: &RepairOutcome) -> Self {
        OutcomeRecord {
            policy: policy.to_string(),
            request_size,
            mode,
            status: outcome.status,
            initial_accuracy_percent: outcome.initial_accuracy_percent,
            best_accuracy_percent: outcome.best_accuracy_percent,
            iterations_used: outcome.iterations_used,
            total_ms: crate::repair::ms(outcome.total_time),
            synth_ms: crate::repair::ms(outcome.synth_time),
            validation_ms: crate::repair::ms(outcome.validation_time),
            best_policy_digest: outcome.best_policy.fingerprint(),
            best_policy: outcome.best_policy.to_json(),
            trace: outcome.trace.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub file: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub policy: String,
    pub request_size: usize,
    pub mode: Option<PromptMode>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub request_size: Option<usize>,
    pub mode: PromptMode,
    pub count: usize,
    pub bins: Bins,
    pub mean_accuracy_percent: f64,
    pub avg_iterations: f64,
    pub avg_total_ms: f64,
    pub avg_synth_ms: f64,
    pub avg_validation_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Significance {
    pub request_size: Option<usize>,
    pub base_mean_percent: f64,
    pub fl_mean_percent: f64,
    pub delta_percent_points: f64,
    pub test: TTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub per_policy: Vec<OutcomeRecord>,
    pub bins: Bins,
    /// Per mode over all sizes, then per (size, mode).
    pub approaches: Vec<GroupSummary>,
    pub by_size: Vec<GroupSummary>,
    pub significance: Vec<Significance>,
    pub skipped: Vec<Skipped>,
    pub failures: Vec<RunFailure>,
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn summarize(records: &[&OutcomeRecord], request_size: Option<usize>, mode: PromptMode) -> GroupSummary {
    GroupSummary {
        request_size,
        mode,
        count: records.len(),
        bins: bin_accuracies(records.iter().map(|r| r.best_accuracy_percent)),
        mean_accuracy_percent: mean(records.iter().map(|r| r.best_accuracy_percent)),
        avg_iterations: mean(records.iter().map(|r| r.iterations_used as f64)),
        avg_total_ms: mean(records.iter().map(|r| r.total_ms)),
        avg_synth_ms: mean(records.iter().map(|r| r.synth_ms)),
        avg_validation_ms: mean(records.iter().map(|r| r.validation_ms)),
    }
}

fn compare(records: &[&OutcomeRecord], request_size: Option<usize>) -> Option<Significance> {
    let acc = |mode| -> Vec<f64> {
        records
            .iter()
            .filter(|r| r.mode == mode)
            .map(|r| r.best_accuracy_percent)
            .collect()
    };
    let (base, fl) = (acc(PromptMode::Base), acc(PromptMode::FaultLocalization));
    let test = welch_ttest(&fl, &base).ok()?;
    let (base_mean, fl_mean) = (mean(base.iter().copied()), mean(fl.iter().copied()));
    Some(Significance {
        request_size,
        base_mean_percent: base_mean,
        fl_mean_percent: fl_mean,
        delta_percent_points: fl_mean - base_mean,
        test,
    })
}

/// Aggregates outcome records into bins, per-approach summaries and significance rows.
pub fn build_report(per_policy: Vec<OutcomeRecord>, skipped: Vec<Skipped>, failures: Vec<RunFailure>) -> BatchReport {
    let all: Vec<&OutcomeRecord> = per_policy.iter().collect();
    let modes: Vec<PromptMode> = [PromptMode::Base, PromptMode::FaultLocalization]
        .into_iter()
        .filter(|m| all.iter().any(|r| r.mode == *m))
        .collect();
    let mut sizes: Vec<usize> = all.iter().map(|r| r.request_size).collect();
    sizes.sort_unstable();
    sizes.dedup();

    let approaches = modes
        .iter()
        .map(|&m| {
            let group: Vec<&OutcomeRecord> = all.iter().copied().filter(|r| r.mode == m).collect();
            summarize(&group, None, m)
        })
        .collect();
    let mut by_size = Vec::new();
    let mut significance = Vec::new();
    for &size in &sizes {
        let at_size: Vec<&OutcomeRecord> = all.iter().copied().filter(|r| r.request_size == size).collect();
        for &m in &modes {
            let group: Vec<&OutcomeRecord> = at_size.iter().copied().filter(|r| r.mode == m).collect();
            by_size.push(summarize(&group, Some(size), m));
        }
        significance.extend(compare(&at_size, Some(size)));
    }
    if sizes.len() > 1 {
        significance.extend(compare(&all, None));
    }

    BatchReport {
        bins: bin_accuracies(all.iter().map(|r| r.best_accuracy_percent)),
        per_policy,
        approaches,
        by_size,
        significance,
        skipped,
        failures,
    }
}

fn mode_name(mode: PromptMode) -> &'static str {
    match mode {
        PromptMode::Base => "Baseline",
        PromptMode::FaultLocalization => "FL",
    }
}

impl BatchReport {
    /// Plain-text tables: accuracy bins, timing, and significance.
    pub fn render_tables(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Repair accuracy");
        let _ = writeln!(
            out,
            "{:<6} {:<9} {:>5} {:>14} {:>14} {:>14} {:>9}",
            "Size", "Approach", "N", "100%", "80-99%", "<80%", "Mean%"
        );
        let rows = self.by_size.iter().chain(self.approaches.iter());
        for g in rows.clone() {
            let (pc, pm, pf) = g.bins.percentages();
            let size = g.request_size.map(|s| s.to_string()).unwrap_or_else(|| "all".into());
            let _ = writeln!(
                out,
                "{:<6} {:<9} {:>5} {:>6} ({:>5.1}) {:>6} ({:>5.1}) {:>6} ({:>5.1}) {:>9.2}",
                size,
                mode_name(g.mode),
                g.count,
                g.bins.complete,
                pc,
                g.bins.moderate,
                pm,
                g.bins.failed,
                pf,
                g.mean_accuracy_percent
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Timing (averages per policy)");
        let _ = writeln!(
            out,
            "{:<6} {:<9} {:>10} {:>12} {:>12} {:>12}",
            "Size", "Approach", "Iter.", "Total ms", "Synth ms", "Valid. ms"
        );
        for g in rows {
            let size = g.request_size.map(|s| s.to_string()).unwrap_or_else(|| "all".into());
            let _ = writeln!(
                out,
                "{:<6} {:<9} {:>10.2} {:>12.2} {:>12.2} {:>12.2}",
                size,
                mode_name(g.mode),
                g.avg_iterations,
                g.avg_total_ms,
                g.avg_synth_ms,
                g.avg_validation_ms
            );
        }
        if !self.significance.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(out, "Significance (Welch two-tailed, FL vs Baseline)");
            let _ = writeln!(
                out,
                "{:<6} {:>10} {:>10} {:>10} {:>12}",
                "Size", "Baseline%", "FL%", "Delta pp", "p-value"
            );
            for s in &self.significance {
                let size = s.request_size.map(|s| s.to_string()).unwrap_or_else(|| "all".into());
                let p = if s.test.p_two_tailed < 0.001 {
                    "<0.001".to_string()
                } else {
                    format!("{:.3}", s.test.p_two_tailed)
                };
                let marker = if s.test.significant() { "" } else { " (n.s.)" };
                let _ = writeln!(
                    out,
                    "{:<6} {:>10.2} {:>10.2} {:>+10.2} {:>12}{}",
                    size, s.base_mean_percent, s.fl_mean_percent, s.delta_percent_points, p, marker
                );
            }
        }
        if !self.skipped.is_empty() || !self.failures.is_empty() {
            let _ = writeln!(out);
            for s in &self.skipped {
                let _ = writeln!(out, "skipped {}: {}", s.file, s.reason);
            }
            for f in &self.failures {
                let mode = f.mode.map(mode_name).unwrap_or("all");
                let _ = writeln!(
                    out,
                    "failed {} (n={}, {}): {}",
                    f.policy, f.request_size, mode, f.reason
                );
            }
        }
        out
    }
}

/// Policy files (`*.json`, non-recursive) in name order.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>, BatchError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    Ok(files)
}

/// Policies keyed by file name.
pub type Corpus = Vec<(String, Policy)>;

/// Loads every policy in `dir`; unparseable files are returned as skipped.
pub fn load_corpus(dir: &Path) -> Result<(Corpus, Vec<Skipped>), BatchError> {
    let mut policies = Vec::new();
    let mut skipped = Vec::new();
    for path in corpus_files(dir)? {
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        match normalize_policy(&text) {
            Ok(p) => policies.push((name, p)),
            Err(e) => skipped.push(Skipped {
                file: name,
                reason: e.to_string(),
            }),
        }
    }
    Ok((policies, skipped))
}

fn stem(name: &str) -> &str {
    name.strip_suffix(".json").unwrap_or(name)
}

pub fn suite_file_name(policy_file: &str, size: usize) -> String {
    format!("{}.n{size}.json", stem(policy_file))
}

struct Job {
    policy_index: usize,
    size: usize,
    mode: PromptMode,
    spec_index: usize,
}

pub fn run_batch(corpus_dir: &Path, cfg: &BatchConfig) -> Result<BatchReport, BatchError> {
    let synthesizer =
        synthesizer_from_config(&cfg.repair.synthesizer).map_err(|e| BatchError::InvalidConfig(e.to_string()))?;
    run_batch_with(corpus_dir, cfg, synthesizer.as_ref())
}

pub fn run_batch_with(
    corpus_dir: &Path,
    cfg: &BatchConfig,
    synthesizer: &dyn Synthesizer,
) -> Result<BatchReport, BatchError> {
    use rayon::prelude::*;

    let started = Instant::now();
    let (policies, skipped) = load_corpus(corpus_dir)?;
    if policies.is_empty() {
        return Err(BatchError::EmptyCorpus);
    }
    let requests_out = cfg.output_dir.join("requests");
    fs::create_dir_all(&requests_out).map_err(io_err(&requests_out))?;

    let mut failures = Vec::new();
    let mut specs: Vec<RequestSpec> = Vec::new();
    let mut manifest = String::new();
    let mut jobs = Vec::new();
    for (policy_index, (name, policy)) in policies.iter().enumerate() {
        for &size in &cfg.sizes {
            let file = suite_file_name(name, size);
            let existing = cfg.requests_dir.as_ref().map(|d| d.join(&file)).filter(|p| p.is_file());
            let loaded = match existing {
                Some(path) => {
                    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
                    RequestSpec::from_json_str(&text).map_err(|e| e.to_string())
                }
                None => generate_requests(policy, &GenConfig::new(size, cfg.rho, cfg.seed)).map_err(|e| e.to_string()),
            };
            let spec = match loaded {
                Ok(spec) => spec,
                Err(reason) => {
                    failures.push(RunFailure {
                        policy: name.clone(),
                        request_size: size,
                        mode: None,
                        reason,
                    });
                    continue;
                }
            };
            let out_path = requests_out.join(&file);
            fs::write(&out_path, spec.to_json_string()).map_err(io_err(&out_path))?;
            let entry = ManifestEntry {
                policy_file: name.clone(),
                n: size,
                rho: cfg.rho,
                seed: cfg.seed,
                output: format!("requests/{file}"),
            };
            manifest.push_str(&serde_json::to_string(&entry).expect("manifest entry serializes"));
            manifest.push('\n');
            specs.push(spec);
            for &mode in &cfg.modes {
                jobs.push(Job {
                    policy_index,
                    size,
                    mode,
                    spec_index: specs.len() - 1,
                });
            }
        }
    }
    let manifest_path = cfg.output_dir.join("manifest.jsonl");
    fs::write(&manifest_path, manifest).map_err(io_err(&manifest_path))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| BatchError::InvalidConfig(e.to_string()))?;
    let results: Vec<Result<OutcomeRecord, RunFailure>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let (name, policy) = &policies[job.policy_index];
                let fail = |reason: String| RunFailure {
                    policy: name.clone(),
                    request_size: job.size,
                    mode: Some(job.mode),
                    reason,
                };
                if cfg.time_budget.is_some_and(|b| started.elapsed() > b) {
                    return Err(fail("time budget exhausted".into()));
                }
                let run_cfg = RepairConfig {
                    mode: job.mode,
                    ..cfg.repair.clone()
                };
                repair_with(policy, &specs[job.spec_index], &run_cfg, synthesizer)
                    .map(|outcome| OutcomeRecord::new(name, job.size, job.mode, &outcome))
                    .map_err(|e| fail(e.to_string()))
            })
            .collect()
    });

    let mut records = Vec::new();
    for r in results {
        match r {
            Ok(record) => records.push(record),
            Err(f) => failures.push(f),
        }
    }

    let outcomes_path = cfg.output_dir.join("outcomes.jsonl");
    fs::write(&outcomes_path, outcomes_jsonl(&records)).map_err(io_err(&outcomes_path))?;
    let report = build_report(records, skipped, failures);
    write_report(&report, &cfg.output_dir)?;
    Ok(report)
}

pub fn outcomes_jsonl(records: &[OutcomeRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("outcome record serializes"));
        out.push('\n');
    }
    out
}

pub fn read_outcomes(text: &str) -> Result<Vec<OutcomeRecord>, BatchError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| BatchError::MalformedRecord(e.to_string())))
        .collect()
}

/// Writes `report.json` and `report.txt` into `dir`.
pub fn write_report(report: &BatchReport, dir: &Path) -> Result<(), BatchError> {
    let json_path = dir.join("report.json");
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    fs::write(&json_path, json).map_err(io_err(&json_path))?;
    let txt_path = dir.join("report.txt");
    fs::write(&txt_path, report.render_tables()).map_err(io_err(&txt_path))?;
    Ok(())
}
