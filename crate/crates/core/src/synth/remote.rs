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

//! Chat-completion HTTP backend.

use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::extract::extract_policy_from_response;
use super::{Backend, SynthError, SynthesisResult, SynthesizerConfig};
use crate::prompt::Prompt;

enum AttemptError {
    Transport(String),
    Timeout,
    Extraction(String),
}

/// Sends the prompt as a system + user message pair and extracts a policy
/// from the first choice. Transport failures, non-success statuses and
/// unusable replies are retried until `retry_limit` attempts have been made.
pub fn synthesize_remote(prompt: &Prompt, cfg: &SynthesizerConfig) -> Result<SynthesisResult, SynthError> {
    let endpoint = cfg
        .endpoint
        .as_deref()
        .ok_or_else(|| SynthError::InvalidConfig("remote backend needs an endpoint".into()))?;
    let model = cfg
        .model_name
        .as_deref()
        .ok_or_else(|| SynthError::InvalidConfig("remote backend needs a model name".into()))?;
    let token = match &cfg.api_key_env {
        Some(var) => Some(std::env::var(var).map_err(|_| SynthError::AuthMissing(var.clone()))?),
        None => None,
    };
    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_millis(cfg.request_timeout_ms))
        .build()
        .map_err(|e| SynthError::Transport(e.to_string()))?;
    let body = json!({
        "model": model,
        "messages": [
            {"role": "system", "content": prompt.system},
            {"role": "user", "content": prompt.user},
        ],
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_output_tokens,
    });

    let started = Instant::now();
    let attempts_allowed = cfg.retry_limit.max(1);
    let mut last = AttemptError::Transport("no attempt made".into());
    for attempt in 1..=attempts_allowed {
        if attempt > 1 && cfg.retry_backoff_ms > 0 {
            std::thread::sleep(Duration::from_millis(cfg.retry_backoff_ms));
        }
        match attempt_once(&client, endpoint, token.as_deref(), &body) {
            Ok((raw, candidate)) => {
                return Ok(SynthesisResult {
                    candidate,
                    raw_output: raw,
                    latency: started.elapsed(),
                    backend_used: Backend::Remote,
                    attempts: attempt,
                    notes: Vec::new(),
                })
            }
            Err(e) => {
                match &e {
                    AttemptError::Transport(msg) | AttemptError::Extraction(msg) => {
                        log::warn!("synthesis attempt {attempt}/{attempts_allowed} failed: {msg}")
                    }
                    AttemptError::Timeout => log::warn!("synthesis attempt {attempt}/{attempts_allowed} timed out"),
                }
                last = e;
            }
        }
    }
    Err(match last {
        AttemptError::Transport(msg) => SynthError::Transport(msg),
        AttemptError::Timeout => SynthError::Timeout,
        AttemptError::Extraction(msg) => SynthError::ExtractionFailed {
            attempts: attempts_allowed,
            reason: msg,
        },
    })
}

fn attempt_once(
    client: &reqwest::blocking::Client,
    endpoint: &str,
    token: Option<&str>,
    body: &Value,
) -> Result<(String, crate::policy::Policy), AttemptError> {
    let mut request = client.post(endpoint).json(body);
    if let Some(token) = token {
        request = request.bearer_auth(token);
    }
    let response = request.send().map_err(classify)?;
    let status = response.status();
    if !status.is_success() {
        return Err(AttemptError::Transport(format!("HTTP {status}")));
    }
    let payload: Value = response.json().map_err(classify)?;
    let content = payload
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| AttemptError::Extraction("response has no choices[0].message.content".into()))?
        .to_string();
    let policy = extract_policy_from_response(&content).map_err(|e| AttemptError::Extraction(e.to_string()))?;
    Ok((content, policy))
}

fn classify(e: reqwest::Error) -> AttemptError {
    if e.is_timeout() {
        AttemptError::Timeout
    } else if e.is_decode() {
        AttemptError::Extraction(e.to_string())
    } else {
        AttemptError::Transport(e.to_string())
    }
}
