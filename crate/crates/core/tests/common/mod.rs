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

//! Shared helpers for integration tests: a small-alphabet random policy
//! generator and an evaluator built on the `regex` crate, independent of the
//! library's own matcher.

#![allow(dead_code)]

pub mod stub;

use std::path::PathBuf;

use policy_repair::{AccessRequest, ConditionClause, ConditionOperator, Effect, Policy, Statement, Verdict};
use rand::seq::SliceRandom;
use rand::Rng;
use regex::Regex;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn sample_corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/sample-corpus")
}

const ACTION_VALUE: &[char] = &['a', 'b', 'A', 'B', ':'];
const ACTION_PATTERN: &[char] = &['a', 'b', 'B', ':', '*', '?'];
const RESOURCE_VALUE: &[char] = &['x', 'y', 'X', '/'];
const RESOURCE_PATTERN: &[char] = &['x', 'y', 'X', '/', '*', '?'];
const PRINCIPALS: &[&str] = &["u1", "u2", "r1"];
const PRINCIPAL_PATTERNS: &[&str] = &["u1", "u?", "r*", "*", "u2"];
const KEYS: &[&str] = &["k1", "k2"];
const CONTEXT_VALUES: &[&str] = &["v1", "v2", "w1"];
const CONTEXT_PATTERNS: &[&str] = &["v1", "v?", "w*", "*", "v2"];

fn word<R: Rng>(rng: &mut R, alphabet: &[char], max_len: usize) -> String {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

pub fn random_statement<R: Rng>(rng: &mut R, sid: usize) -> Statement {
    let effect = if rng.gen_bool(0.6) { Effect::Allow } else { Effect::Deny };
    let action = (0..rng.gen_range(1..=2))
        .map(|_| word(rng, ACTION_PATTERN, 4))
        .collect();
    let resource = (0..rng.gen_range(1..=2))
        .map(|_| word(rng, RESOURCE_PATTERN, 4))
        .collect();
    let mut stmt = Statement::new(effect, action, resource);
    stmt.sid = Some(format!("S{sid}"));
    if rng.gen_bool(0.25) {
        stmt.principal = Some(
            (0..rng.gen_range(1..=2))
                .map(|_| PRINCIPAL_PATTERNS.choose(rng).unwrap().to_string())
                .collect(),
        );
    }
    if rng.gen_bool(0.25) {
        let mut clauses: Vec<ConditionClause> = (0..rng.gen_range(1..=2))
            .map(|_| {
                let operator = if rng.gen_bool(0.5) {
                    ConditionOperator::StringEquals
                } else {
                    ConditionOperator::StringLike
                };
                let values = (0..rng.gen_range(1..=2))
                    .map(|_| CONTEXT_PATTERNS.choose(rng).unwrap().to_string())
                    .collect();
                ConditionClause {
                    operator,
                    key: KEYS.choose(rng).unwrap().to_string(),
                    values,
                }
            })
            .collect();
        // The JSON form keys clauses by (operator, key), so keep those unique.
        clauses.dedup_by(|a, b| a.operator == b.operator && a.key == b.key);
        stmt.condition = Some(clauses);
    }
    stmt
}

pub fn random_policy<R: Rng>(rng: &mut R, max_statements: usize) -> Policy {
    let n = rng.gen_range(1..=max_statements);
    Policy::new((0..n).map(|i| random_statement(rng, i)).collect())
}

pub fn random_request<R: Rng>(rng: &mut R, expected: Effect) -> AccessRequest {
    let mut req = AccessRequest::new(word(rng, ACTION_VALUE, 4), word(rng, RESOURCE_VALUE, 4), expected);
    if rng.gen_bool(0.7) {
        req = req.with_principal(*PRINCIPALS.choose(rng).unwrap());
    }
    if rng.gen_bool(0.7) {
        let mut pairs = Vec::new();
        for k in KEYS {
            if rng.gen_bool(0.7) {
                pairs.push((k.to_string(), CONTEXT_VALUES.choose(rng).unwrap().to_string()));
            }
        }
        req = req.with_context(pairs);
    }
    req
}

/// Expands `*` and `?` into an anchored regular expression.
pub fn wildcard_regex(pattern: &str, case_insensitive: bool) -> Regex {
    let mut re = String::from(if case_insensitive { "(?si)^" } else { "(?s)^" });
    for c in pattern.chars() {
        match c {
            '*' => re.push_str(".*"),
            '?' => re.push('.'),
            c => re.push_str(&regex::escape(&c.to_string())),
        }
    }
    re.push('$');
    Regex::new(&re).unwrap()
}

fn any_matches(patterns: &[String], value: &str, ci: bool) -> bool {
    patterns.iter().any(|p| wildcard_regex(p, ci).is_match(value))
}

pub fn oracle_matches(stmt: &Statement, req: &AccessRequest) -> bool {
    if let Some(patterns) = &stmt.principal {
        match &req.principal {
            Some(p) if any_matches(patterns, p, false) => {}
            _ => return false,
        }
    }
    if !any_matches(&stmt.action, &req.action, true) || !any_matches(&stmt.resource, &req.resource, false) {
        return false;
    }
    let context = req.context.clone().unwrap_or_default();
    stmt.condition.iter().flatten().all(|clause| {
        context.iter().any(|(k, v)| {
            k == &clause.key
                && clause.values.iter().any(|expected| match clause.operator {
                    ConditionOperator::StringEquals => expected == v,
                    ConditionOperator::StringLike => wildcard_regex(expected, false).is_match(v),
                })
        })
    })
}

pub fn oracle_verdict(policy: &Policy, req: &AccessRequest) -> Verdict {
    let matching: Vec<Effect> = policy
        .statements
        .iter()
        .filter(|s| oracle_matches(s, req))
        .map(|s| s.effect)
        .collect();
    if matching.contains(&Effect::Deny) {
        Verdict::ExplicitDeny
    } else if matching.contains(&Effect::Allow) {
        Verdict::Allow
    } else {
        Verdict::ImplicitDeny
    }
}

/// Request carrying a principal and a value for every condition key, the
/// shape the generator produces.
pub fn uniform_request<R: Rng>(rng: &mut R, expected: Effect) -> AccessRequest {
    let pairs = KEYS
        .iter()
        .map(|k| (k.to_string(), CONTEXT_VALUES.choose(rng).unwrap().to_string()))
        .collect();
    AccessRequest::new(word(rng, ACTION_VALUE, 3), word(rng, RESOURCE_VALUE, 3), expected)
        .with_principal(*PRINCIPALS.choose(rng).unwrap())
        .with_context(pairs)
}

/// Random spec with distinct tuples; `uniform` selects `uniform_request`.
pub fn random_spec<R: Rng>(rng: &mut R, count: usize, uniform: bool) -> policy_repair::RequestSpec {
    let mut seen = std::collections::HashSet::new();
    let (mut allow, mut deny) = (Vec::new(), Vec::new());
    for _ in 0..count {
        let label = if rng.gen_bool(0.5) { Effect::Allow } else { Effect::Deny };
        let req = if uniform {
            uniform_request(rng, label)
        } else {
            random_request(rng, label)
        };
        if seen.insert(req.identity()) {
            match label {
                Effect::Allow => allow.push(req),
                Effect::Deny => deny.push(req),
            }
        }
    }
    policy_repair::RequestSpec::new(allow, deny)
}
