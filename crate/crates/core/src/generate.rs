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

//! Synthetic request suites: allowed and denied samples drawn from a policy's
//! own elements, with a chosen fraction deliberately mislabeled.
//!
//! Every generated request carries a principal and a full context assignment
//! (the same key set for the whole suite), so an exact-match statement built
//! from one request matches no other request in the suite.

use std::collections::{BTreeSet, HashSet};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{evaluate, AccessRequest, RequestSpec};
use crate::lexicon;
use crate::pattern::{has_wildcard, match_pattern};
use crate::policy::{ConditionOperator, Effect, Policy};

const MAX_ACTIONS_PER_PATTERN: usize = 4;
const MAX_ACTIONS: usize = 12;
const MAX_RESOURCES: usize = 12;
const MAX_PRINCIPALS: usize = 10;
const MAX_CONTEXTS: usize = 8;
const MAX_COMPLEMENT_ACTIONS: usize = 6;
const MAX_COMPLEMENT_RESOURCES: usize = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
    #[error("only {available} distinct {label} request(s) exist, {wanted} requested")]
    InsufficientCombinations {
        label: Effect,
        wanted: usize,
        available: usize,
    },
    #[error("could only mislabel {achieved} of {wanted} requests")]
    ModificationFailed { wanted: usize, achieved: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n: usize,
    pub rho: f64,
    pub seed: u64,
}

impl GenConfig {
    pub fn new(n: usize, rho: f64, seed: u64) -> Self {
        GenConfig { n, rho, seed }
    }

    fn check(&self) -> Result<(), GenError> {
        if self.n == 0 {
            return Err(GenError::InvalidConfig("n must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(GenError::InvalidConfig(format!("rho {} is outside [0, 1]", self.rho)));
        }
        Ok(())
    }

    /// ⌊0.6n⌋, computed in integers.
    pub fn allowed_count(&self) -> usize {
        self.n * 6 / 10
    }

    pub fn denied_count(&self) -> usize {
        self.n - self.allowed_count()
    }

    /// ⌊ρn⌋; the epsilon absorbs products such as 0.1 * 30 = 3.0000000000000004
    /// and 0.3 * 10 = 2.9999999999999996.
    pub fn mislabeled_count(&self) -> usize {
        (self.rho * self.n as f64 + 1e-9).floor() as usize
    }
}

/// Concrete values drawn from a policy, wildcards instantiated.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PolicyElements {
    pub actions: Vec<String>,
    pub resources: Vec<String>,
    pub principals: Vec<String>,
    /// Full context assignments over the suite's key set.
    pub conditions: Vec<Vec<(String, String)>>,
}

impl PolicyElements {
    fn combinations(&self) -> usize {
        self.actions.len() * self.resources.len() * self.principals.len() * self.conditions.len()
    }

    fn request_at(&self, mut idx: usize, expected: Effect) -> AccessRequest {
        let c = idx % self.conditions.len();
        idx /= self.conditions.len();
        let p = idx % self.principals.len();
        idx /= self.principals.len();
        let r = idx % self.resources.len();
        idx /= self.resources.len();
        let a = idx;
        AccessRequest {
            principal: Some(self.principals[p].clone()),
            action: self.actions[a].clone(),
            resource: self.resources[r].clone(),
            context: Some(self.conditions[c].clone()),
            expected,
        }
    }

    fn union(&self, other: &PolicyElements) -> PolicyElements {
        PolicyElements {
            actions: dedup_actions(self.actions.iter().chain(&other.actions).cloned()),
            resources: dedup(self.resources.iter().chain(&other.resources).cloned()),
            principals: dedup(self.principals.iter().chain(&other.principals).cloned()),
            conditions: dedup(self.conditions.iter().chain(&other.conditions).cloned()),
        }
    }
}

fn dedup<T: Clone + Eq + std::hash::Hash>(items: impl IntoIterator<Item = T>) -> Vec<T> {
    let mut seen = HashSet::new();
    items.into_iter().filter(|x| seen.insert(x.clone())).collect()
}

/// Actions compare case-insensitively; the first spelling wins.
fn dedup_actions(items: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut seen = HashSet::new();
    items.into_iter().filter(|a| seen.insert(a.to_lowercase())).collect()
}

fn capped<T>(mut v: Vec<T>, cap: usize) -> Vec<T> {
    v.truncate(cap);
    v
}

/// Every `*` replaced by each segment in turn, every `?` by a fixed character.
fn substitute(pattern: &str, segments: &[&str]) -> Vec<String> {
    dedup(segments.iter().map(|seg| {
        pattern
            .chars()
            .map(|c| match c {
                '*' => seg.to_string(),
                '?' => lexicon::SINGLE_CHAR.to_string(),
                c => c.to_string(),
            })
            .collect::<String>()
    }))
}

/// Up to `cap` catalogue entries matching `pattern`, picked with an even stride.
fn catalogue_picks(pattern: &str, cap: usize) -> Vec<String> {
    let matches: Vec<&str> = lexicon::ACTION_CATALOGUE
        .iter()
        .copied()
        .filter(|a| match_pattern(pattern, a, true))
        .collect();
    let stride = matches.len().div_ceil(cap).max(1);
    matches
        .iter()
        .step_by(stride)
        .take(cap)
        .map(|s| s.to_string())
        .collect()
}

fn instantiate_action(pattern: &str) -> Vec<String> {
    if !has_wildcard(pattern) {
        return vec![pattern.to_string()];
    }
    let picks = catalogue_picks(pattern, MAX_ACTIONS_PER_PATTERN);
    if picks.is_empty() {
        substitute(pattern, lexicon::ACTION_SEGMENTS)
    } else {
        picks
    }
}

fn instantiate_resource(pattern: &str) -> Vec<String> {
    if pattern == "*" {
        lexicon::RESOURCE_SAMPLES.iter().map(|s| s.to_string()).collect()
    } else if has_wildcard(pattern) {
        substitute(pattern, lexicon::RESOURCE_SEGMENTS)
    } else {
        vec![pattern.to_string()]
    }
}

fn lexicon_principals() -> Vec<String> {
    lexicon::PRINCIPALS.iter().map(|s| s.to_string()).collect()
}

fn instantiate_principal(pattern: &str) -> Vec<String> {
    if pattern == "*" {
        lexicon_principals()
    } else if has_wildcard(pattern) {
        substitute(pattern, lexicon::RESOURCE_SEGMENTS)
    } else {
        vec![pattern.to_string()]
    }
}

fn instantiate_condition_value(operator: ConditionOperator, value: &str) -> Vec<String> {
    match operator {
        ConditionOperator::StringEquals => vec![value.to_string()],
        ConditionOperator::StringLike => substitute(value, lexicon::RESOURCE_SEGMENTS),
    }
}

/// Context keys used by a suite: the base key plus every condition key in the policy.
fn context_keys(policy: &Policy) -> Vec<String> {
    let mut keys: BTreeSet<String> = BTreeSet::new();
    keys.insert(lexicon::BASE_CONTEXT_KEY.to_string());
    for stmt in &policy.statements {
        for clause in stmt.conditions() {
            keys.insert(clause.key.clone());
        }
    }
    keys.into_iter().collect()
}

fn key_value_pool(policy: &Policy, key: &str) -> Vec<String> {
    let mut pool = Vec::new();
    for stmt in &policy.statements {
        for clause in stmt.conditions().iter().filter(|c| c.key == key) {
            for v in &clause.values {
                pool.extend(instantiate_condition_value(clause.operator, v));
            }
        }
    }
    if key == lexicon::BASE_CONTEXT_KEY {
        pool.extend(lexicon::SOURCE_IPS.iter().map(|s| s.to_string()));
    }
    if pool.is_empty() {
        pool.push(lexicon::UNMATCHED_VALUE.to_string());
    }
    dedup(pool)
}

/// Collects the policy's concrete actions, resources, principals and
/// context assignments. Deterministic: no randomness is involved.
pub fn extract_elements(policy: &Policy) -> PolicyElements {
    let mut actions = Vec::new();
    let mut resources = Vec::new();
    let mut principals = Vec::new();
    for stmt in &policy.statements {
        for a in &stmt.action {
            actions.extend(instantiate_action(a));
        }
        for r in &stmt.resource {
            resources.extend(instantiate_resource(r));
        }
        match &stmt.principal {
            None => principals.extend(lexicon_principals()),
            Some(pats) => {
                for p in pats {
                    principals.extend(instantiate_principal(p));
                }
            }
        }
    }

    let keys = context_keys(policy);
    let pools: Vec<Vec<String>> = keys.iter().map(|k| key_value_pool(policy, k)).collect();
    let mut conditions = Vec::new();
    for stmt in policy.statements.iter().filter(|s| !s.conditions().is_empty()) {
        let assignment = keys
            .iter()
            .zip(&pools)
            .map(|(key, pool)| {
                let value = stmt
                    .conditions()
                    .iter()
                    .find(|c| &c.key == key)
                    .and_then(|c| instantiate_condition_value(c.operator, &c.values[0]).into_iter().next())
                    .unwrap_or_else(|| pool[0].clone());
                (key.clone(), value)
            })
            .collect::<Vec<_>>();
        conditions.push(assignment);
    }
    for i in 0..lexicon::SOURCE_IPS.len() {
        conditions.push(
            keys.iter()
                .zip(&pools)
                .map(|(key, pool)| (key.clone(), pool[i % pool.len()].clone()))
                .collect(),
        );
    }

    PolicyElements {
        actions: capped(dedup_actions(actions), MAX_ACTIONS),
        resources: capped(dedup(resources), MAX_RESOURCES),
        principals: capped(dedup(principals), MAX_PRINCIPALS),
        conditions: capped(dedup(conditions), MAX_CONTEXTS),
    }
}

/// Swaps the region, else the account, else renames the leading resource segment.
fn perturb_resource(resource: &str) -> String {
    let parts: Vec<&str> = resource.splitn(6, ':').collect();
    if parts.len() == 6 && parts[0] == "arn" {
        let mut parts: Vec<String> = parts.iter().map(|s| s.to_string()).collect();
        if !parts[3].is_empty() {
            parts[3] = lexicon::REGION_SWAPS
                .iter()
                .find(|(from, _)| *from == parts[3])
                .map(|(_, to)| to.to_string())
                .unwrap_or_else(|| lexicon::FALLBACK_REGION.to_string());
        } else if !parts[4].is_empty() {
            parts[4] = lexicon::ACCOUNT_SWAP.to_string();
        } else {
            parts[5] = rename_leading_segment(&parts[5]);
        }
        parts.join(":")
    } else {
        rename_leading_segment(resource)
    }
}

fn rename_leading_segment(s: &str) -> String {
    match s.split_once('/') {
        Some((head, tail)) => format!("{head}{}/{tail}", lexicon::RESOURCE_SUFFIX),
        None => format!("{s}{}", lexicon::RESOURCE_SUFFIX),
    }
}

/// Values outside the policy's vocabulary: unlisted catalogue actions,
/// perturbed resources, an outside principal and unmatched context values.
pub fn complements(policy: &Policy, elements: &PolicyElements) -> PolicyElements {
    let allow_patterns: Vec<&String> = policy
        .statements
        .iter()
        .filter(|s| s.effect == Effect::Allow)
        .flat_map(|s| s.action.iter())
        .collect();
    let unlisted: Vec<&str> = lexicon::ACTION_CATALOGUE
        .iter()
        .copied()
        .filter(|a| !allow_patterns.iter().any(|p| match_pattern(p, a, true)))
        .collect();
    let stride = unlisted.len().div_ceil(MAX_COMPLEMENT_ACTIONS).max(1);
    let actions = unlisted
        .iter()
        .step_by(stride)
        .take(MAX_COMPLEMENT_ACTIONS)
        .map(|s| s.to_string())
        .collect();

    let resources = capped(
        dedup(
            elements
                .resources
                .iter()
                .map(|r| perturb_resource(r))
                .filter(|r| !elements.resources.contains(r)),
        ),
        MAX_COMPLEMENT_RESOURCES,
    );

    let keys = context_keys(policy);
    let unmatched = |k: &String| {
        if k == lexicon::BASE_CONTEXT_KEY {
            lexicon::UNMATCHED_SOURCE_IP.to_string()
        } else {
            lexicon::UNMATCHED_VALUE.to_string()
        }
    };
    let mut conditions = vec![keys.iter().map(|k| (k.clone(), unmatched(k))).collect::<Vec<_>>()];
    if let Some(first) = elements.conditions.first() {
        conditions.push(
            first
                .iter()
                .map(|(k, v)| {
                    if k == lexicon::BASE_CONTEXT_KEY {
                        (k.clone(), v.clone())
                    } else {
                        (k.clone(), unmatched(k))
                    }
                })
                .collect(),
        );
    }

    PolicyElements {
        actions,
        resources,
        principals: vec![lexicon::OUTSIDER_PRINCIPAL.to_string()],
        conditions: dedup(conditions)
            .into_iter()
            .filter(|c| !elements.conditions.contains(c))
            .collect(),
    }
}

/// Uniformly draws `k` distinct tuples from `domain` satisfying `accept`.
///
/// Rejection sampling first; when the acceptance rate is too low the
/// accepted remainder is enumerated exhaustively, which also decides
/// `InsufficientCombinations` exactly.
fn sample_tuples(
    policy: &Policy,
    domain: &PolicyElements,
    k: usize,
    label: Effect,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<AccessRequest>, GenError> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let total = domain.combinations();
    let accept = |req: &AccessRequest| evaluate(policy, req).verdict.effect() == label;
    let mut tried = HashSet::new();
    let mut chosen = Vec::new();
    let budget = 20 * k + 100;
    let mut attempts = 0;
    while chosen.len() < k && attempts < budget && total > 0 {
        attempts += 1;
        let idx = rng.gen_range(0..total);
        if tried.insert(idx) {
            let req = domain.request_at(idx, label);
            if accept(&req) {
                chosen.push(req);
            }
        }
    }
    if chosen.len() < k {
        let rest: Vec<AccessRequest> = (0..total)
            .filter(|idx| !tried.contains(idx))
            .map(|idx| domain.request_at(idx, label))
            .filter(|req| accept(req))
            .collect();
        let missing = k - chosen.len();
        if rest.len() < missing {
            return Err(GenError::InsufficientCombinations {
                label,
                wanted: k,
                available: chosen.len() + rest.len(),
            });
        }
        for i in index::sample(rng, rest.len(), missing).into_vec() {
            chosen.push(rest[i].clone());
        }
    }
    Ok(chosen)
}

/// `k` distinct requests the policy allows, each labeled Allow.
pub fn sample_allowed(
    policy: &Policy,
    elements: &PolicyElements,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<AccessRequest>, GenError> {
    sample_tuples(policy, elements, k, Effect::Allow, rng)
}

/// `k` distinct requests the policy denies, each labeled Deny, drawn from the
/// policy's elements together with their complements.
pub fn sample_denied(
    policy: &Policy,
    elements: &PolicyElements,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<AccessRequest>, GenError> {
    let domain = elements.union(&complements(policy, elements));
    sample_tuples(policy, &domain, k, Effect::Deny, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Attribute {
    Resource,
    Principal,
    Condition,
}

/// A generated suite together with how it was assembled.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSuite {
    pub spec: RequestSpec,
    pub allowed_sampled: usize,
    pub denied_sampled: usize,
    /// Positions (in allowed-then-denied sample order) whose label was flipped,
    /// with the attribute that was changed.
    pub mislabeled: Vec<(usize, Attribute)>,
}

type OwnedTuple = crate::eval::RequestIdentity;

fn owned_tuple(r: &AccessRequest) -> OwnedTuple {
    r.identity()
}

/// Replaces exactly one of resource / principal / context so the policy's
/// verdict is unchanged and the tuple stays unique.
fn modify_attributes(
    policy: &Policy,
    pools: &PolicyElements,
    req: &AccessRequest,
    taken: &HashSet<OwnedTuple>,
    rng: &mut ChaCha8Rng,
) -> Option<(AccessRequest, Attribute)> {
    let allowed_before = evaluate(policy, req).verdict.is_allow();
    let keeps = |cand: &AccessRequest| {
        !taken.contains(&owned_tuple(cand)) && evaluate(policy, cand).verdict.is_allow() == allowed_before
    };
    let mut options: Vec<(Attribute, Vec<AccessRequest>)> = Vec::new();

    let by_resource: Vec<AccessRequest> = pools
        .resources
        .iter()
        .filter(|r| **r != req.resource)
        .map(|r| AccessRequest {
            resource: r.clone(),
            ..req.clone()
        })
        .filter(|c| keeps(c))
        .collect();
    options.push((Attribute::Resource, by_resource));

    let by_principal: Vec<AccessRequest> = pools
        .principals
        .iter()
        .filter(|p| req.principal.as_deref() != Some(p.as_str()))
        .map(|p| AccessRequest {
            principal: Some(p.clone()),
            ..req.clone()
        })
        .filter(|c| keeps(c))
        .collect();
    options.push((Attribute::Principal, by_principal));

    let by_condition: Vec<AccessRequest> = pools
        .conditions
        .iter()
        .filter(|c| req.context.as_ref() != Some(*c))
        .map(|c| AccessRequest {
            context: Some(c.clone()),
            ..req.clone()
        })
        .filter(|c| keeps(c))
        .collect();
    options.push((Attribute::Condition, by_condition));

    options.retain(|(_, cands)| !cands.is_empty());
    if options.is_empty() {
        return None;
    }
    let (attr, cands) = &options[rng.gen_range(0..options.len())];
    let pick = cands[rng.gen_range(0..cands.len())].clone();
    Some((pick, *attr))
}

pub fn generate_requests(policy: &Policy, cfg: &GenConfig) -> Result<RequestSpec, GenError> {
    generate_suite(policy, cfg).map(|suite| suite.spec)
}

pub fn generate_suite(policy: &Policy, cfg: &GenConfig) -> Result<GeneratedSuite, GenError> {
    cfg.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let elements = extract_elements(policy);
    let allowed = sample_allowed(policy, &elements, cfg.allowed_count(), &mut rng)?;
    let denied = sample_denied(policy, &elements, cfg.denied_count(), &mut rng)?;
    let (allowed_sampled, denied_sampled) = (allowed.len(), denied.len());

    let mut requests: Vec<AccessRequest> = allowed.into_iter().chain(denied).collect();
    let pools = elements.union(&complements(policy, &elements));
    let wanted = cfg.mislabeled_count();
    let mut order: Vec<usize> = (0..requests.len()).collect();
    order.shuffle(&mut rng);

    let mut taken: HashSet<OwnedTuple> = requests.iter().map(owned_tuple).collect();
    let mut mislabeled = Vec::new();
    for idx in order {
        if mislabeled.len() == wanted {
            break;
        }
        let original = requests[idx].clone();
        taken.remove(&owned_tuple(&original));
        match modify_attributes(policy, &pools, &original, &taken, &mut rng) {
            Some((mut modified, attr)) => {
                modified.expected = original.expected.flip();
                taken.insert(owned_tuple(&modified));
                requests[idx] = modified;
                mislabeled.push((idx, attr));
            }
            None => {
                taken.insert(owned_tuple(&original));
            }
        }
    }
    if mislabeled.len() < wanted {
        return Err(GenError::ModificationFailed {
            wanted,
            achieved: mislabeled.len(),
        });
    }
    mislabeled.sort_by_key(|(idx, _)| *idx);

    let (must_allow, must_deny): (Vec<_>, Vec<_>) = requests.into_iter().partition(|r| r.expected == Effect::Allow);
    Ok(GeneratedSuite {
        spec: RequestSpec::new(must_allow, must_deny),
        allowed_sampled,
        denied_sampled,
        mislabeled,
    })
}

/// One line of a generation manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub policy_file: String,
    pub n: usize,
    pub rho: f64,
    pub seed: u64,
    pub output: String,
}
