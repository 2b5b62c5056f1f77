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

//! The iterative repair loop: validate, localize, prompt, synthesize,
//! re-validate, keeping the most accurate candidate.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::eval::{validate_goal, EvalError, RequestSpec, ValidationResult};
use crate::localize::localize;
use crate::policy::Policy;
use crate::prompt::{build_prompt, PromptContext, PromptMode};
use crate::synth::{synthesizer_from_config, SynthesisInput, Synthesizer, SynthesizerConfig};

/// Lower bound of the moderate-repair bin.
pub const MODERATE_FLOOR_PERCENT: f64 = 80.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepairError {
    #[error("request specification is contradictory ({0} request(s) in both lists)")]
    ContradictorySpec(usize),
    #[error("request specification is empty")]
    EmptySpec,
    #[error("invalid repair configuration: {0}")]
    InvalidConfig(String),
    #[error("synthesizer produced no candidate in any iteration (last error: {0})")]
    SynthesizerUnavailable(String),
}

impl From<EvalError> for RepairError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::EmptySpec => RepairError::EmptySpec,
            EvalError::ContradictorySpec(n) => RepairError::ContradictorySpec(n),
            EvalError::MalformedSpec(m) => RepairError::InvalidConfig(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairConfig {
    pub max_iterations: usize,
    pub mode: PromptMode,
    pub synthesizer: SynthesizerConfig,
    pub target_accuracy_percent: f64,
}

impl Default for RepairConfig {
    fn default() -> Self {
        RepairConfig {
            max_iterations: 5,
            mode: PromptMode::FaultLocalization,
            synthesizer: SynthesizerConfig::default(),
            target_accuracy_percent: 100.0,
        }
    }
}

impl RepairConfig {
    fn check(&self) -> Result<(), RepairError> {
        if self.max_iterations == 0 {
            return Err(RepairError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.target_accuracy_percent > 0.0 && self.target_accuracy_percent <= 100.0) {
            return Err(RepairError::InvalidConfig("target accuracy must be in (0, 100]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RepairStatus {
    CompleteRepair,
    PartialRepair,
    Failure,
}

impl RepairStatus {
    /// 100 is complete, [80, 100) partial, below 80 a failure.
    pub fn from_accuracy(accuracy_percent: f64) -> Self {
        if accuracy_percent >= 100.0 {
            RepairStatus::CompleteRepair
        } else if accuracy_percent >= MODERATE_FLOOR_PERCENT {
            RepairStatus::PartialRepair
        } else {
            RepairStatus::Failure
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `None` when the synthesizer produced no candidate.
    pub accuracy_percent: Option<f64>,
    pub prompt_digest: String,
    pub candidate_digest: Option<String>,
    pub synth_ms: f64,
    pub validation_ms: f64,
    /// Whether the candidate became the working policy.
    pub accepted: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepairOutcome {
    pub status: RepairStatus,
    pub best_policy: Policy,
    pub best_accuracy_percent: f64,
    pub initial_accuracy_percent: f64,
    pub iterations_used: usize,
    pub trace: Vec<IterationRecord>,
    pub total_time: Duration,
    pub synth_time: Duration,
    pub validation_time: Duration,
}

impl RepairOutcome {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "status": self.status,
            "best_accuracy_percent": self.best_accuracy_percent,
            "initial_accuracy_percent": self.initial_accuracy_percent,
            "iterations_used": self.iterations_used,
            "best_policy_digest": self.best_policy.fingerprint(),
            "best_policy": self.best_policy.to_json(),
            "trace": self.trace,
            "total_ms": ms(self.total_time),
            "synth_ms": ms(self.synth_time),
            "validation_ms": ms(self.validation_time),
        })
    }
}

pub(crate) fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

pub fn repair(policy: &Policy, spec: &RequestSpec, cfg: &RepairConfig) -> Result<RepairOutcome, RepairError> {
    let synthesizer =
        synthesizer_from_config(&cfg.synthesizer).map_err(|e| RepairError::InvalidConfig(e.to_string()))?;
    repair_with(policy, spec, cfg, synthesizer.as_ref())
}

/// Runs the loop with an explicit synthesizer.
///
/// A candidate replaces the working policy only when it is strictly more
/// accurate; a candidate reaching the target is returned at once.
pub fn repair_with(
    policy: &Policy,
    spec: &RequestSpec,
    cfg: &RepairConfig,
    synthesizer: &dyn Synthesizer,
) -> Result<RepairOutcome, RepairError> {
    cfg.check()?;
    spec.check_consistent()?;
    let started = Instant::now();
    let (initial, mut validation_time) = timed(|| validate_goal(policy, spec));
    let initial = initial?;
    let initial_accuracy = initial.accuracy_percent;

    let mut working = policy.clone();
    let mut working_val: ValidationResult = initial;
    let mut synth_time = Duration::ZERO;
    let mut trace = Vec::new();
    let mut produced_any = false;
    let mut last_error = String::new();

    let finish =
        |best: Policy, best_accuracy: f64, trace: Vec<IterationRecord>, synth_time, validation_time| RepairOutcome {
            status: RepairStatus::from_accuracy(best_accuracy),
            best_policy: best,
            best_accuracy_percent: best_accuracy,
            initial_accuracy_percent: initial_accuracy,
            iterations_used: trace.len(),
            trace,
            total_time: started.elapsed(),
            synth_time,
            validation_time,
        };

    if working_val.accuracy_percent >= cfg.target_accuracy_percent {
        return Ok(finish(working, initial_accuracy, trace, synth_time, validation_time));
    }

    for iteration in 1..=cfg.max_iterations {
        let report = match cfg.mode {
            PromptMode::FaultLocalization => {
                Some(localize(&working, &working_val).expect("working policy has misclassifications"))
            }
            PromptMode::Base => None,
        };
        let ctx = PromptContext {
            policy: &working,
            spec,
            report: report.as_ref(),
            iteration,
            accuracy_percent: working_val.accuracy_percent,
        };
        let prompt = build_prompt(cfg.mode, &ctx).expect("report is fresh for the working policy");
        let input = SynthesisInput {
            prompt: &prompt,
            policy: &working,
            spec,
            report: report.as_ref(),
        };
        let (result, synth_elapsed) = timed(|| synthesizer.synthesize(&input));
        synth_time += synth_elapsed;

        let mut record = IterationRecord {
            iteration,
            accuracy_percent: None,
            prompt_digest: prompt.digest(),
            candidate_digest: None,
            synth_ms: ms(synth_elapsed),
            validation_ms: 0.0,
            accepted: false,
            error: None,
        };
        let candidate = match result {
            Ok(result) => result.candidate,
            Err(e) => {
                log::debug!("iteration {iteration}: synthesis failed: {e}");
                last_error = e.to_string();
                record.error = Some(last_error.clone());
                trace.push(record);
                continue;
            }
        };
        produced_any = true;

        let (validation, validation_elapsed) = timed(|| validate_goal(&candidate, spec));
        let validation = validation?;
        validation_time += validation_elapsed;
        record.validation_ms = ms(validation_elapsed);
        record.accuracy_percent = Some(validation.accuracy_percent);
        record.candidate_digest = Some(candidate.fingerprint());

        if validation.accuracy_percent > working_val.accuracy_percent {
            record.accepted = true;
            trace.push(record);
            working = candidate;
            working_val = validation;
            if working_val.accuracy_percent >= cfg.target_accuracy_percent {
                let acc = working_val.accuracy_percent;
                return Ok(finish(working, acc, trace, synth_time, validation_time));
            }
        } else {
            trace.push(record);
        }
    }

    if !produced_any {
        return Err(RepairError::SynthesizerUnavailable(last_error));
    }
    let acc = working_val.accuracy_percent;
    Ok(finish(working, acc, trace, synth_time, validation_time))
}

/// Repairs independent (policy, spec) pairs on a bounded pool; results keep input order.
pub fn repair_batch(
    items: &[(Policy, RequestSpec)],
    cfg: &RepairConfig,
    synthesizer: &dyn Synthesizer,
    workers: usize,
) -> Vec<Result<RepairOutcome, RepairError>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        items
            .par_iter()
            .map(|(policy, spec)| repair_with(policy, spec, cfg, synthesizer))
            .collect()
    })
}
