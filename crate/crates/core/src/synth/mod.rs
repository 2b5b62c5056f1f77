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

//! Candidate policy synthesis: a remote chat-completion backend and a
//! deterministic rule-based backend behind one trait.

mod extract;
mod remote;
mod rules;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use extract::{extract_policy_from_response, ExtractError};
pub use remote::synthesize_remote;
pub use rules::{exact_statement, synthesize_rule_based};

use crate::eval::{validate_goal, RequestSpec};
use crate::localize::{localize, FaultReport};
use crate::policy::Policy;
use crate::prompt::Prompt;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SynthError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("no usable policy after {attempts} attempt(s): {reason}")]
    ExtractionFailed { attempts: usize, reason: String },
    #[error("credential environment variable {0} is not set")]
    AuthMissing(String),
    #[error("invalid synthesizer configuration: {0}")]
    InvalidConfig(String),
    #[error("request specification is contradictory")]
    ContradictorySpec,
    #[error("no fault is repairable by the rule-based backend")]
    NothingRepairable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Remote,
    RuleBased,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesizerConfig {
    pub backend: Backend,
    pub endpoint: Option<String>,
    pub model_name: Option<String>,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub request_timeout_ms: u64,
    /// Maximum number of attempts per synthesis call.
    pub retry_limit: usize,
    pub retry_backoff_ms: u64,
    /// Environment variable holding the bearer token; `None` sends no credential.
    pub api_key_env: Option<String>,
}

impl Default for SynthesizerConfig {
    fn default() -> Self {
        SynthesizerConfig {
            backend: Backend::RuleBased,
            endpoint: None,
            model_name: None,
            temperature: 0.2,
            max_output_tokens: 2048,
            request_timeout_ms: 120_000,
            retry_limit: 3,
            retry_backoff_ms: 500,
            api_key_env: Some("POLICY_REPAIR_API_KEY".into()),
        }
    }
}

impl SynthesizerConfig {
    pub fn rule_based() -> Self {
        SynthesizerConfig::default()
    }

    pub fn remote(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        SynthesizerConfig {
            backend: Backend::Remote,
            endpoint: Some(endpoint.into()),
            model_name: Some(model.into()),
            ..SynthesizerConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.temperature < 0.0 {
            return Err(SynthError::InvalidConfig("temperature must be non-negative".into()));
        }
        if self.backend == Backend::Remote && (self.endpoint.is_none() || self.model_name.is_none()) {
            return Err(SynthError::InvalidConfig(
                "remote backend needs both an endpoint and a model name".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub candidate: Policy,
    pub raw_output: String,
    pub latency: Duration,
    pub backend_used: Backend,
    pub attempts: usize,
    pub notes: Vec<String>,
}

/// Everything a backend may look at for one repair step.
#[derive(Debug, Clone, Copy)]
pub struct SynthesisInput<'a> {
    pub prompt: &'a Prompt,
    pub policy: &'a Policy,
    pub spec: &'a RequestSpec,
    pub report: Option<&'a FaultReport>,
}

pub trait Synthesizer: Send + Sync {
    fn synthesize(&self, input: &SynthesisInput<'_>) -> Result<SynthesisResult, SynthError>;
}

#[derive(Debug, Clone)]
pub struct RemoteSynthesizer {
    pub config: SynthesizerConfig,
}

impl Synthesizer for RemoteSynthesizer {
    fn synthesize(&self, input: &SynthesisInput<'_>) -> Result<SynthesisResult, SynthError> {
        synthesize_remote(input.prompt, &self.config)
    }
}

/// Ignores the prompt; localizes faults itself when none are supplied, so it
/// also serves base-prompt runs.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleBasedSynthesizer;

impl Synthesizer for RuleBasedSynthesizer {
    fn synthesize(&self, input: &SynthesisInput<'_>) -> Result<SynthesisResult, SynthError> {
        match input.report {
            Some(report) => synthesize_rule_based(input.policy, report, input.spec),
            None => {
                let validation =
                    validate_goal(input.policy, input.spec).map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
                let report = localize(input.policy, &validation).map_err(|_| SynthError::NothingRepairable)?;
                synthesize_rule_based(input.policy, &report, input.spec)
            }
        }
    }
}

pub fn synthesizer_from_config(cfg: &SynthesizerConfig) -> Result<Box<dyn Synthesizer>, SynthError> {
    cfg.validate()?;
    Ok(match cfg.backend {
        Backend::Remote => Box::new(RemoteSynthesizer { config: cfg.clone() }),
        Backend::RuleBased => Box::new(RuleBasedSynthesizer),
    })
}
