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

//! Request evaluation (deny overrides allow, default implicit deny) and goal
//! validation against must-allow / must-deny request lists.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::pattern::match_pattern;
use crate::policy::{ConditionClause, ConditionOperator, Effect, Policy, Statement};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("request specification is empty")]
    EmptySpec,
    #[error("malformed request specification: {0}")]
    MalformedSpec(String),
    #[error("request specification lists {0} request(s) in both must_allow and must_deny")]
    ContradictorySpec(usize),
}

/// A concrete request tuple plus the label it is expected to receive.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AccessRequest {
    pub principal: Option<String>,
    pub action: String,
    pub resource: String,
    pub context: Option<Vec<(String, String)>>,
    pub expected: Effect,
}

impl AccessRequest {
    pub fn new(action: impl Into<String>, resource: impl Into<String>, expected: Effect) -> Self {
        AccessRequest {
            principal: None,
            action: action.into(),
            resource: resource.into(),
            context: None,
            expected,
        }
    }

    pub fn with_principal(mut self, principal: impl Into<String>) -> Self {
        self.principal = Some(principal.into());
        self
    }

    pub fn with_context(mut self, pairs: Vec<(String, String)>) -> Self {
        self.context = Some(pairs);
        self
    }

    pub fn context_pairs(&self) -> &[(String, String)] {
        self.context.as_deref().unwrap_or(&[])
    }

    /// The (principal, action, resource, context) tuple without the label.
    pub fn tuple(&self) -> RequestTuple<'_> {
        (
            self.principal.as_deref(),
            &self.action,
            &self.resource,
            self.context.as_deref(),
        )
    }

    /// Key under which two requests denote the same access: the action is
    /// lowercased and context pairs are sorted.
    pub fn identity(&self) -> RequestIdentity {
        let context = self.context.as_ref().map(|pairs| {
            let mut pairs = pairs.clone();
            pairs.sort();
            pairs
        });
        (
            self.principal.clone(),
            self.action.to_lowercase(),
            self.resource.clone(),
            context,
        )
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        if let Some(p) = &self.principal {
            obj.insert("principal".into(), Value::String(p.clone()));
        }
        obj.insert("action".into(), Value::String(self.action.clone()));
        obj.insert("resource".into(), Value::String(self.resource.clone()));
        if let Some(ctx) = &self.context {
            let mut c = Map::new();
            for (k, v) in ctx {
                c.insert(k.clone(), Value::String(v.clone()));
            }
            obj.insert("context".into(), Value::Object(c));
        }
        Value::Object(obj)
    }

    fn from_json(value: &Value, expected: Effect) -> Result<Self, EvalError> {
        let obj = value
            .as_object()
            .ok_or_else(|| EvalError::MalformedSpec("request is not an object".into()))?;
        let text = |key: &str| -> Result<Option<String>, EvalError> {
            match obj.get(key) {
                None | Some(Value::Null) => Ok(None),
                Some(Value::String(s)) => Ok(Some(s.clone())),
                Some(_) => Err(EvalError::MalformedSpec(format!("\"{key}\" is not a string"))),
            }
        };
        let action = text("action")?.ok_or_else(|| EvalError::MalformedSpec("request without \"action\"".into()))?;
        let resource =
            text("resource")?.ok_or_else(|| EvalError::MalformedSpec("request without \"resource\"".into()))?;
        let context = match obj.get("context") {
            None | Some(Value::Null) => None,
            Some(Value::Object(c)) => Some(
                c.iter()
                    .map(|(k, v)| match v {
                        Value::String(s) => Ok((k.clone(), s.clone())),
                        other => Ok((k.clone(), other.to_string())),
                    })
                    .collect::<Result<Vec<_>, EvalError>>()?,
            ),
            Some(_) => return Err(EvalError::MalformedSpec("\"context\" is not an object".into())),
        };
        Ok(AccessRequest {
            principal: text("principal")?,
            action,
            resource,
            context,
            expected,
        })
    }
}

pub type RequestTuple<'a> = (Option<&'a str>, &'a str, &'a str, Option<&'a [(String, String)]>);

pub type RequestIdentity = (Option<String>, String, String, Option<Vec<(String, String)>>);

/// Must-allow and must-deny request lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RequestSpec {
    pub must_allow: Vec<AccessRequest>,
    pub must_deny: Vec<AccessRequest>,
}

impl RequestSpec {
    pub fn new(must_allow: Vec<AccessRequest>, must_deny: Vec<AccessRequest>) -> Self {
        RequestSpec { must_allow, must_deny }
    }

    /// All requests, must-allow first, in list order.
    pub fn requests(&self) -> impl Iterator<Item = &AccessRequest> {
        self.must_allow.iter().chain(self.must_deny.iter())
    }

    pub fn len(&self) -> usize {
        self.must_allow.len() + self.must_deny.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of must-allow tuples that also appear in must_deny.
    pub fn contradictions(&self) -> usize {
        let denied: HashSet<_> = self.must_deny.iter().map(AccessRequest::identity).collect();
        self.must_allow
            .iter()
            .filter(|r| denied.contains(&r.identity()))
            .count()
    }

    pub fn check_consistent(&self) -> Result<(), EvalError> {
        match self.contradictions() {
            0 => Ok(()),
            n => Err(EvalError::ContradictorySpec(n)),
        }
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert(
            "must_allow".into(),
            Value::Array(self.must_allow.iter().map(AccessRequest::to_json).collect()),
        );
        obj.insert(
            "must_deny".into(),
            Value::Array(self.must_deny.iter().map(AccessRequest::to_json).collect()),
        );
        Value::Object(obj)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("request spec is always serializable")
    }

    /// Parses the request-spec file format. Labels come from the list a request is in.
    pub fn from_json_str(text: &str) -> Result<Self, EvalError> {
        let value: Value = serde_json::from_str(text).map_err(|e| EvalError::MalformedSpec(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| EvalError::MalformedSpec("top level is not an object".into()))?;
        let list = |key: &str, expected: Effect| -> Result<Vec<AccessRequest>, EvalError> {
            match obj.get(key) {
                None | Some(Value::Null) => Ok(Vec::new()),
                Some(Value::Array(items)) => items.iter().map(|v| AccessRequest::from_json(v, expected)).collect(),
                Some(_) => Err(EvalError::MalformedSpec(format!("\"{key}\" is not an array"))),
            }
        };
        let spec = RequestSpec {
            must_allow: list("must_allow", Effect::Allow)?,
            must_deny: list("must_deny", Effect::Deny)?,
        };
        spec.check_consistent()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Allow,
    ExplicitDeny,
    ImplicitDeny,
}

impl Verdict {
    pub fn is_allow(self) -> bool {
        self == Verdict::Allow
    }

    /// The coarse allow/deny outcome.
    pub fn effect(self) -> Effect {
        if self.is_allow() {
            Effect::Allow
        } else {
            Effect::Deny
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Allow => "Allow",
            Verdict::ExplicitDeny => "ExplicitDeny",
            Verdict::ImplicitDeny => "ImplicitDeny",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub verdict: Verdict,
    pub matched_allow: Vec<usize>,
    pub matched_deny: Vec<usize>,
}

/// Case handling for action and resource patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchOptions {
    pub action_case_insensitive: bool,
    pub resource_case_insensitive: bool,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions {
            action_case_insensitive: true,
            resource_case_insensitive: false,
        }
    }
}

pub fn statement_matches(stmt: &Statement, req: &AccessRequest) -> bool {
    statement_matches_with(stmt, req, MatchOptions::default())
}

pub fn statement_matches_with(stmt: &Statement, req: &AccessRequest, opts: MatchOptions) -> bool {
    let principal_ok = match (&stmt.principal, &req.principal) {
        (None, _) => true,
        (Some(patterns), Some(p)) => patterns.iter().any(|pat| match_pattern(pat, p, false)),
        (Some(_), None) => false,
    };
    principal_ok
        && stmt
            .action
            .iter()
            .any(|pat| match_pattern(pat, &req.action, opts.action_case_insensitive))
        && stmt
            .resource
            .iter()
            .any(|pat| match_pattern(pat, &req.resource, opts.resource_case_insensitive))
        && stmt
            .conditions()
            .iter()
            .all(|clause| clause_satisfied(clause, req.context_pairs()))
}

/// A clause over a key missing from the context is unsatisfied.
pub fn clause_satisfied(clause: &ConditionClause, context: &[(String, String)]) -> bool {
    context.iter().filter(|(k, _)| *k == clause.key).any(|(_, v)| {
        clause.values.iter().any(|expected| match clause.operator {
            ConditionOperator::StringEquals => expected == v,
            ConditionOperator::StringLike => match_pattern(expected, v, false),
        })
    })
}

pub fn evaluate(policy: &Policy, req: &AccessRequest) -> Decision {
    evaluate_with(policy, req, MatchOptions::default())
}

pub fn evaluate_with(policy: &Policy, req: &AccessRequest, opts: MatchOptions) -> Decision {
    let mut matched_allow = Vec::new();
    let mut matched_deny = Vec::new();
    for (i, stmt) in policy.statements.iter().enumerate() {
        if statement_matches_with(stmt, req, opts) {
            match stmt.effect {
                Effect::Allow => matched_allow.push(i),
                Effect::Deny => matched_deny.push(i),
            }
        }
    }
    let verdict = if !matched_deny.is_empty() {
        Verdict::ExplicitDeny
    } else if !matched_allow.is_empty() {
        Verdict::Allow
    } else {
        Verdict::ImplicitDeny
    };
    Decision {
        verdict,
        matched_allow,
        matched_deny,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValidationStatus {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationResult {
    pub status: ValidationStatus,
    pub per_request: Vec<(AccessRequest, Decision)>,
    pub correct_count: usize,
    pub total_count: usize,
    pub accuracy_percent: f64,
    /// Fingerprint of the policy this result was computed for.
    pub policy_fingerprint: String,
}

impl ValidationResult {
    pub fn passed(&self) -> bool {
        self.status == ValidationStatus::Pass
    }

    pub fn misclassified(&self) -> impl Iterator<Item = &(AccessRequest, Decision)> {
        self.per_request
            .iter()
            .filter(|(req, decision)| !is_correct(req, decision.verdict))
    }
}

/// Must-deny requests are satisfied by either kind of deny.
pub fn is_correct(req: &AccessRequest, verdict: Verdict) -> bool {
    match req.expected {
        Effect::Allow => verdict == Verdict::Allow,
        Effect::Deny => verdict != Verdict::Allow,
    }
}

/// Classifies every request (no early exit) and computes accuracy.
pub fn validate_goal(policy: &Policy, spec: &RequestSpec) -> Result<ValidationResult, EvalError> {
    if spec.is_empty() {
        return Err(EvalError::EmptySpec);
    }
    let per_request: Vec<(AccessRequest, Decision)> = spec
        .requests()
        .map(|req| (req.clone(), evaluate(policy, req)))
        .collect();
    let correct_count = per_request.iter().filter(|(req, d)| is_correct(req, d.verdict)).count();
    let total_count = per_request.len();
    Ok(ValidationResult {
        status: if correct_count == total_count {
            ValidationStatus::Pass
        } else {
            ValidationStatus::Fail
        },
        per_request,
        correct_count,
        total_count,
        accuracy_percent: accuracy_percent(correct_count, total_count),
        policy_fingerprint: policy.fingerprint(),
    })
}

pub fn accuracy_percent(correct: usize, total: usize) -> f64 {
    100.0 * correct as f64 / total as f64
}
