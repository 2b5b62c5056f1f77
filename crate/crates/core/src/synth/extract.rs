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

//! Pulls a policy out of free-form model output.

use thiserror::Error;

use crate::policy::{normalize_policy, Policy};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractError {
    #[error("response contains no policy-like JSON")]
    NoPolicyFound,
    #[error("no policy candidate could be normalized (last error: {0})")]
    AllCandidatesMalformed(String),
}

/// Tries fenced code blocks first, then every balanced top-level JSON object
/// that mentions a `"Statement"` key. The first candidate that normalizes wins.
pub fn extract_policy_from_response(raw: &str) -> Result<Policy, ExtractError> {
    let mut last_error = None;
    let candidates = fenced_blocks(raw)
        .into_iter()
        .filter(|block| block.contains('{') || block.contains('['))
        .chain(
            balanced_objects(raw)
                .into_iter()
                .filter(|obj| obj.contains("\"Statement\"")),
        );
    for candidate in candidates {
        match normalize_policy(candidate) {
            Ok(policy) => return Ok(policy),
            Err(e) => last_error = Some(e.to_string()),
        }
    }
    match last_error {
        Some(e) => Err(ExtractError::AllCandidatesMalformed(e)),
        None => Err(ExtractError::NoPolicyFound),
    }
}

/// Bodies of ``` fenced blocks, language tag stripped.
fn fenced_blocks(raw: &str) -> Vec<&str> {
    let mut blocks = Vec::new();
    let mut rest = raw;
    while let Some(start) = rest.find("```") {
        let after = &rest[start + 3..];
        let body_start = after.find('\n').map(|i| i + 1).unwrap_or(after.len());
        let body = &after[body_start..];
        match body.find("```") {
            Some(end) => {
                blocks.push(&body[..end]);
                rest = &body[end + 3..];
            }
            None => break,
        }
    }
    blocks
}

/// Top-level `{...}` spans; braces inside JSON strings are ignored.
fn balanced_objects(raw: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in raw.char_indices() {
        if depth > 0 && in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            '"' if depth > 0 => in_string = true,
            '{' => {
                if depth == 0 {
                    start = i;
                }
                depth += 1;
            }
            '}' if depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    out.push(&raw[start..=i]);
                }
            }
            _ => {}
        }
    }
    out
}
