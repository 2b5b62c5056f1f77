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

//! Deterministic rule-based repair used as an offline stand-in for a model.
//!
//! Rules, applied in order:
//! (a) each missing allow gets an Allow statement matching exactly its tuple;
//! (b) each wrongly allowed request gets an exact Deny statement;
//! (c) each wrongly denied request has the explicit action (else resource)
//!     element removed from the responsible Deny statements. A deny that
//!     matches only through a wildcard is left alone and reported.

use std::collections::BTreeMap;
use std::time::Instant;

use super::{Backend, SynthError, SynthesisResult};
use crate::eval::{AccessRequest, RequestSpec};
use crate::localize::{FaultCase, FaultReport};
use crate::pattern::{has_wildcard, match_pattern};
use crate::policy::{ConditionClause, ConditionOperator, Effect, Policy, Statement};

/// Statement matching exactly the request's principal, action, resource and context.
pub fn exact_statement(effect: Effect, req: &AccessRequest, sid: String) -> Statement {
    let mut by_key: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for (k, v) in req.context_pairs() {
        by_key.entry(k).or_default().push(v.clone());
    }
    let condition = if by_key.is_empty() {
        None
    } else {
        Some(
            by_key
                .into_iter()
                .map(|(key, values)| ConditionClause {
                    operator: ConditionOperator::StringEquals,
                    key: key.to_string(),
                    values,
                })
                .collect(),
        )
    };
    Statement {
        sid: Some(sid),
        effect,
        principal: req.principal.clone().map(|p| vec![p]),
        action: vec![req.action.clone()],
        resource: vec![req.resource.clone()],
        condition,
    }
}

fn same_rule(a: &Statement, b: &Statement) -> bool {
    a.effect == b.effect
        && a.principal == b.principal
        && a.action == b.action
        && a.resource == b.resource
        && a.condition == b.condition
}

fn fresh_sid(policy: &Policy, prefix: &str, counter: &mut usize) -> String {
    loop {
        *counter += 1;
        let sid = format!("{prefix}{counter}");
        if !policy.statements.iter().any(|s| s.sid.as_deref() == Some(sid.as_str())) {
            return sid;
        }
    }
}

/// Removes the matching elements from `patterns` if every one of them is
/// wildcard-free. Returns false (leaving `patterns` untouched) otherwise.
fn remove_explicit(patterns: &mut Vec<String>, value: &str, case_insensitive: bool) -> bool {
    let matching: Vec<&String> = patterns
        .iter()
        .filter(|p| match_pattern(p, value, case_insensitive))
        .collect();
    if matching.is_empty() || matching.iter().any(|p| has_wildcard(p)) {
        return false;
    }
    patterns.retain(|p| !match_pattern(p, value, case_insensitive));
    true
}

pub fn synthesize_rule_based(
    policy: &Policy,
    report: &FaultReport,
    spec: &RequestSpec,
) -> Result<SynthesisResult, SynthError> {
    let started = Instant::now();
    if spec.contradictions() > 0 {
        return Err(SynthError::ContradictorySpec);
    }
    if report.entries.is_empty() {
        return Err(SynthError::NothingRepairable);
    }

    let mut candidate = policy.clone();
    let mut notes = Vec::new();
    let mut changed = false;
    let mut counter = 0;

    for (case, effect, prefix) in [
        (FaultCase::MissingAllow, Effect::Allow, "RepairAllow"),
        (FaultCase::WrongExplicitAllow, Effect::Deny, "RepairDeny"),
    ] {
        for entry in report.entries.iter().filter(|e| e.case == case) {
            let sid = fresh_sid(&candidate, prefix, &mut counter);
            let stmt = exact_statement(effect, &entry.request, sid);
            if !candidate.statements.iter().any(|s| same_rule(s, &stmt)) {
                candidate.statements.push(stmt);
                changed = true;
            }
        }
    }

    // Rule (c) edits original statements in place; removals are deferred so
    // indices from the report stay valid.
    let original_len = policy.statements.len();
    for entry in report.entries.iter().filter(|e| e.case == FaultCase::WrongExplicitDeny) {
        let req = &entry.request;
        for &idx in &entry.responsible {
            let Some(stmt) = candidate.statements.get_mut(idx).filter(|_| idx < original_len) else {
                continue;
            };
            if stmt.action.is_empty() || stmt.resource.is_empty() {
                // Already emptied by an earlier entry.
                continue;
            }
            if remove_explicit(&mut stmt.action, &req.action, true)
                || remove_explicit(&mut stmt.resource, &req.resource, false)
            {
                changed = true;
            } else {
                notes.push(format!(
                    "{} denies {} on {} through a wildcard; not repairable by rules",
                    policy.statements[idx].label(idx),
                    req.action,
                    req.resource
                ));
            }
        }
    }
    candidate
        .statements
        .retain(|s| !s.action.is_empty() && !s.resource.is_empty());

    if !changed {
        return Err(SynthError::NothingRepairable);
    }
    let raw_output = candidate.to_canonical_json();
    Ok(SynthesisResult {
        candidate,
        raw_output,
        latency: started.elapsed(),
        backend_used: Backend::RuleBased,
        attempts: 1,
        notes,
    })
}
