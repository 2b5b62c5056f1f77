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

//! Fault localization: maps each misclassified request to the statements
//! responsible for it.
//!
//! Three cases are distinguished. A must-deny request that is allowed is
//! blamed on every Allow statement that allows it on its own. A must-allow
//! request that is denied is blamed on every Deny statement that still denies
//! it when paired with the universal-allow policy; when there is none, the
//! request is simply missing an allow.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{evaluate, AccessRequest, ValidationResult, Verdict};
use crate::policy::{Effect, Policy, Statement};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LocalizeError {
    #[error("validation result was computed for a different policy")]
    FingerprintMismatch,
    #[error("policy classifies every request correctly")]
    NoMisclassifications,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FaultCase {
    WrongExplicitAllow,
    WrongExplicitDeny,
    MissingAllow,
}

impl FaultCase {
    /// Heading used when rendering faults for a repair prompt.
    pub fn heading(self) -> &'static str {
        match self {
            FaultCase::WrongExplicitAllow => "SHOULD BE DENIED BUT EXPLICITLY ALLOWED",
            FaultCase::MissingAllow => "SHOULD BE ALLOWED BUT IMPLICITLY DENIED",
            FaultCase::WrongExplicitDeny => "SHOULD BE ALLOWED BUT EXPLICITLY DENIED",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultEntry {
    pub request: AccessRequest,
    pub case: FaultCase,
    /// Ascending statement indices; empty iff `case` is `MissingAllow`.
    pub responsible: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultReport {
    pub entries: Vec<FaultEntry>,
    pub policy_fingerprint: String,
}

impl FaultReport {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// JSON form used in logs; statements are referenced by Sid or `stmt[i]`.
    pub fn to_json(&self, policy: &Policy) -> serde_json::Value {
        let entries: Vec<serde_json::Value> = self
            .entries
            .iter()
            .map(|e| {
                serde_json::json!({
                    "case": e.case,
                    "expected": e.request.expected,
                    "principal": e.request.principal,
                    "action": e.request.action,
                    "resource": e.request.resource,
                    "responsible": e.responsible.iter().map(|&i| {
                        serde_json::json!({"index": i, "ref": policy.statements.get(i).map(|s| s.label(i))})
                    }).collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({
            "policy_fingerprint": self.policy_fingerprint,
            "entries": entries,
        })
    }
}

/// A single Allow statement over every action and resource.
pub fn universal_allow() -> Policy {
    Policy::new(vec![Statement::new(Effect::Allow, vec!["*".into()], vec!["*".into()])])
}

/// Does `stmt`, alone, allow `req`?
pub fn allows_alone(stmt: &Statement, req: &AccessRequest) -> bool {
    evaluate(&Policy::new(vec![stmt.clone()]), req).verdict == Verdict::Allow
}

/// Does `stmt`, added to the universal-allow policy, explicitly deny `req`?
pub fn denies_over_universal(stmt: &Statement, req: &AccessRequest) -> bool {
    let mut probe = universal_allow();
    probe.statements.push(stmt.clone());
    evaluate(&probe, req).verdict == Verdict::ExplicitDeny
}

pub fn localize(policy: &Policy, validation: &ValidationResult) -> Result<FaultReport, LocalizeError> {
    let fingerprint = policy.fingerprint();
    if fingerprint != validation.policy_fingerprint {
        return Err(LocalizeError::FingerprintMismatch);
    }
    if validation.passed() {
        return Err(LocalizeError::NoMisclassifications);
    }

    let entries = validation
        .misclassified()
        .map(|(req, decision)| localize_one(policy, req, decision.verdict))
        .collect();
    Ok(FaultReport {
        entries,
        policy_fingerprint: fingerprint,
    })
}

fn localize_one(policy: &Policy, req: &AccessRequest, actual: Verdict) -> FaultEntry {
    let indices_where = |effect: Effect, probe: &dyn Fn(&Statement) -> bool| -> Vec<usize> {
        policy
            .statements
            .iter()
            .enumerate()
            .filter(|(_, s)| s.effect == effect && probe(s))
            .map(|(i, _)| i)
            .collect()
    };
    match (req.expected, actual.is_allow()) {
        (Effect::Deny, true) => FaultEntry {
            request: req.clone(),
            case: FaultCase::WrongExplicitAllow,
            responsible: indices_where(Effect::Allow, &|s| allows_alone(s, req)),
        },
        (Effect::Allow, false) => {
            let responsible = indices_where(Effect::Deny, &|s| denies_over_universal(s, req));
            let case = if responsible.is_empty() {
                FaultCase::MissingAllow
            } else {
                FaultCase::WrongExplicitDeny
            };
            FaultEntry {
                request: req.clone(),
                case,
                responsible,
            }
        }
        _ => unreachable!("only misclassified requests are localized"),
    }
}
