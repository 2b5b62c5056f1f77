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

//! IAM-style policy model: parsing, normalization, canonical serialization
//! and corpus statistics.

use std::collections::BTreeSet;
use std::fmt;

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Condition operators understood by the evaluator.
pub const SUPPORTED_CONDITION_OPERATORS: &[&str] = &["StringEquals", "StringLike"];

const REJECTED_ELEMENTS: &[&str] = &["NotAction", "NotResource", "NotPrincipal"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolicyError {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("policy has no \"Statement\" element")]
    MissingStatement,
    #[error("policy has no statements")]
    EmptyPolicy,
    #[error("statement {index} has no \"Effect\"")]
    MissingEffect { index: usize },
    #[error("statement {index} has invalid effect {value:?}")]
    InvalidEffect { index: usize, value: String },
    #[error("statement {index} has an empty or missing {field}")]
    EmptyActionOrResource { index: usize, field: &'static str },
    #[error("statement {index}: unsupported condition operator {operator:?}")]
    UnsupportedConditionOperator { index: usize, operator: String },
    #[error("statement {index}: unsupported element {element:?}")]
    UnsupportedElement { index: usize, element: String },
    #[error("statement {index}: invalid {field}: {reason}")]
    InvalidField {
        index: usize,
        field: &'static str,
        reason: String,
    },
    #[error("policy text could not be repaired: {0}")]
    Unrepairable(String),
    #[error("corpus is empty")]
    EmptyCorpus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Effect {
    Allow,
    Deny,
}

impl Effect {
    pub fn as_str(self) -> &'static str {
        match self {
            Effect::Allow => "Allow",
            Effect::Deny => "Deny",
        }
    }

    pub fn flip(self) -> Effect {
        match self {
            Effect::Allow => Effect::Deny,
            Effect::Deny => Effect::Allow,
        }
    }

    /// Case-insensitive parse; forum-sourced policies often write `"allow"`.
    pub fn parse(s: &str) -> Option<Effect> {
        if s.eq_ignore_ascii_case("allow") {
            Some(Effect::Allow)
        } else if s.eq_ignore_ascii_case("deny") {
            Some(Effect::Deny)
        } else {
            None
        }
    }
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConditionOperator {
    StringEquals,
    StringLike,
}

impl ConditionOperator {
    pub fn as_str(self) -> &'static str {
        match self {
            ConditionOperator::StringEquals => "StringEquals",
            ConditionOperator::StringLike => "StringLike",
        }
    }

    pub fn parse(s: &str) -> Option<ConditionOperator> {
        match s {
            "StringEquals" => Some(ConditionOperator::StringEquals),
            "StringLike" => Some(ConditionOperator::StringLike),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConditionClause {
    pub operator: ConditionOperator,
    pub key: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Statement {
    pub sid: Option<String>,
    pub effect: Effect,
    /// `None` means the statement applies to any principal.
    pub principal: Option<Vec<String>>,
    pub action: Vec<String>,
    pub resource: Vec<String>,
    pub condition: Option<Vec<ConditionClause>>,
}

impl Statement {
    pub fn new(effect: Effect, action: Vec<String>, resource: Vec<String>) -> Self {
        Statement {
            sid: None,
            effect,
            principal: None,
            action,
            resource,
            condition: None,
        }
    }

    pub fn conditions(&self) -> &[ConditionClause] {
        self.condition.as_deref().unwrap_or(&[])
    }

    /// Sid when present, otherwise the zero-based position as `stmt[i]`.
    pub fn label(&self, index: usize) -> String {
        match &self.sid {
            Some(sid) => sid.clone(),
            None => format!("stmt[{index}]"),
        }
    }

    fn to_json(&self) -> Value {
        let mut obj = Map::new();
        if let Some(sid) = &self.sid {
            obj.insert("Sid".into(), Value::String(sid.clone()));
        }
        obj.insert("Effect".into(), Value::String(self.effect.as_str().into()));
        if let Some(principal) = &self.principal {
            let value = if principal.len() == 1 && principal[0] == "*" {
                Value::String("*".into())
            } else {
                let mut p = Map::new();
                p.insert("AWS".into(), string_array(principal));
                Value::Object(p)
            };
            obj.insert("Principal".into(), value);
        }
        obj.insert("Action".into(), string_array(&self.action));
        obj.insert("Resource".into(), string_array(&self.resource));
        if let Some(clauses) = &self.condition {
            let mut cond = Map::new();
            for clause in clauses {
                let entry = cond
                    .entry(clause.operator.as_str())
                    .or_insert_with(|| Value::Object(Map::new()));
                if let Value::Object(keys) = entry {
                    keys.insert(clause.key.clone(), string_array(&clause.values));
                }
            }
            obj.insert("Condition".into(), Value::Object(cond));
        }
        Value::Object(obj)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Policy {
    pub version: Option<String>,
    pub statements: Vec<Statement>,
}

impl Policy {
    pub fn new(statements: Vec<Statement>) -> Self {
        Policy {
            version: Some("2012-10-17".into()),
            statements,
        }
    }

    /// Canonical JSON value: keys in IAM order, every list element rendered as an array.
    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        if let Some(version) = &self.version {
            obj.insert("Version".into(), Value::String(version.clone()));
        }
        obj.insert(
            "Statement".into(),
            Value::Array(self.statements.iter().map(Statement::to_json).collect()),
        );
        Value::Object(obj)
    }

    /// Canonical text with 2-space indentation.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("policy JSON is always serializable")
    }

    /// SHA-256 over the canonical text, hex encoded.
    pub fn fingerprint(&self) -> String {
        digest_hex(self.to_canonical_json().as_bytes())
    }
}

pub(crate) fn digest_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn string_array(values: &[String]) -> Value {
    Value::Array(values.iter().cloned().map(Value::String).collect())
}

/// Parses strict JSON policy text.
pub fn parse_policy(text: &str) -> Result<Policy, PolicyError> {
    let value: Value = serde_json::from_str(text).map_err(|e| PolicyError::MalformedJson(e.to_string()))?;
    policy_from_value(&value)
}

/// Builds a [`Policy`] from an already-decoded JSON document.
pub fn policy_from_value(value: &Value) -> Result<Policy, PolicyError> {
    let obj = value
        .as_object()
        .ok_or_else(|| PolicyError::MalformedJson("top level is not an object".into()))?;
    let version = match obj.get("Version") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(other) => Some(
            scalar_to_string(other).ok_or_else(|| PolicyError::MalformedJson("\"Version\" is not a string".into()))?,
        ),
    };
    let statements = match obj.get("Statement") {
        None => return Err(PolicyError::MissingStatement),
        Some(Value::Array(items)) => items.iter().collect::<Vec<_>>(),
        Some(single @ Value::Object(_)) => vec![single],
        Some(_) => {
            return Err(PolicyError::MalformedJson(
                "\"Statement\" must be an object or an array".into(),
            ))
        }
    };
    if statements.is_empty() {
        return Err(PolicyError::EmptyPolicy);
    }
    let statements = statements
        .into_iter()
        .enumerate()
        .map(|(index, v)| statement_from_value(index, v))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Policy { version, statements })
}

fn statement_from_value(index: usize, value: &Value) -> Result<Statement, PolicyError> {
    let obj = value.as_object().ok_or_else(|| PolicyError::InvalidField {
        index,
        field: "Statement",
        reason: "statement is not an object".into(),
    })?;
    for element in REJECTED_ELEMENTS {
        if obj.contains_key(*element) {
            return Err(PolicyError::UnsupportedElement {
                index,
                element: (*element).to_string(),
            });
        }
    }

    let sid = match obj.get("Sid") {
        None | Some(Value::Null) => None,
        Some(v) => Some(scalar_to_string(v).ok_or_else(|| PolicyError::InvalidField {
            index,
            field: "Sid",
            reason: "not a string".into(),
        })?),
    };

    let effect = match obj.get("Effect") {
        None | Some(Value::Null) => return Err(PolicyError::MissingEffect { index }),
        Some(Value::String(s)) => Effect::parse(s.trim()).ok_or_else(|| PolicyError::InvalidEffect {
            index,
            value: s.clone(),
        })?,
        Some(other) => {
            return Err(PolicyError::InvalidEffect {
                index,
                value: other.to_string(),
            })
        }
    };

    let principal = match obj.get("Principal") {
        None | Some(Value::Null) => None,
        Some(v) => {
            let principals = principal_list(index, v)?;
            if principals.is_empty() {
                return Err(PolicyError::InvalidField {
                    index,
                    field: "Principal",
                    reason: "no principals listed".into(),
                });
            }
            Some(principals)
        }
    };

    let action = pattern_list(index, "Action", obj.get("Action"))?;
    let resource = pattern_list(index, "Resource", obj.get("Resource"))?;

    let condition = match obj.get("Condition") {
        None | Some(Value::Null) => None,
        Some(v) => {
            let clauses = condition_list(index, v)?;
            if clauses.is_empty() {
                None
            } else {
                Some(clauses)
            }
        }
    };

    Ok(Statement {
        sid,
        effect,
        principal,
        action,
        resource,
        condition,
    })
}

fn scalar_to_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn string_or_list(index: usize, field: &'static str, v: &Value) -> Result<Vec<String>, PolicyError> {
    let invalid = || PolicyError::InvalidField {
        index,
        field,
        reason: "expected a string or a list of strings".into(),
    };
    match v {
        Value::Array(items) => items
            .iter()
            .map(|item| scalar_to_string(item).ok_or_else(invalid))
            .collect(),
        other => scalar_to_string(other).map(|s| vec![s]).ok_or_else(invalid),
    }
}

fn pattern_list(index: usize, field: &'static str, v: Option<&Value>) -> Result<Vec<String>, PolicyError> {
    let values = match v {
        None | Some(Value::Null) => Vec::new(),
        Some(v) => string_or_list(index, field, v)?,
    };
    if values.is_empty() {
        return Err(PolicyError::EmptyActionOrResource { index, field });
    }
    Ok(values)
}

fn principal_list(index: usize, v: &Value) -> Result<Vec<String>, PolicyError> {
    match v {
        // {"AWS": ..., "Service": ...} flattens to the listed identifiers.
        Value::Object(kinds) => {
            let mut out = Vec::new();
            for value in kinds.values() {
                out.extend(string_or_list(index, "Principal", value)?);
            }
            Ok(out)
        }
        other => string_or_list(index, "Principal", other),
    }
}

fn condition_list(index: usize, v: &Value) -> Result<Vec<ConditionClause>, PolicyError> {
    let ops = v.as_object().ok_or_else(|| PolicyError::InvalidField {
        index,
        field: "Condition",
        reason: "expected an object".into(),
    })?;
    let mut clauses = Vec::new();
    for (op_name, keys) in ops {
        let operator = ConditionOperator::parse(op_name).ok_or_else(|| PolicyError::UnsupportedConditionOperator {
            index,
            operator: op_name.clone(),
        })?;
        let keys = keys.as_object().ok_or_else(|| PolicyError::InvalidField {
            index,
            field: "Condition",
            reason: format!("{op_name} must map keys to values"),
        })?;
        for (key, values) in keys {
            let values = string_or_list(index, "Condition", values)?;
            if values.is_empty() {
                return Err(PolicyError::InvalidField {
                    index,
                    field: "Condition",
                    reason: format!("{op_name} {key} has no values"),
                });
            }
            clauses.push(ConditionClause {
                operator,
                key: key.clone(),
                values,
            });
        }
    }
    Ok(clauses)
}

/// Best-effort syntactic repair of forum-quality policy text, followed by
/// [`policy_from_value`].
///
/// Repairs, in order: typographic quotes, comments, trailing commas, a bare
/// statement or statement array at top level. Scalar-to-list promotion and
/// single-statement promotion happen in the parser itself.
pub fn normalize_policy(text: &str) -> Result<Policy, PolicyError> {
    let repaired = strip_trailing_commas(&strip_comments(&replace_smart_quotes(text)));
    let value: Value = serde_json::from_str(repaired.trim()).map_err(|e| PolicyError::Unrepairable(e.to_string()))?;
    let value = match value {
        Value::Array(items) => {
            let mut obj = Map::new();
            obj.insert("Statement".into(), Value::Array(items));
            Value::Object(obj)
        }
        Value::Object(obj) if !obj.contains_key("Statement") && obj.contains_key("Effect") => {
            let mut wrapped = Map::new();
            wrapped.insert("Statement".into(), Value::Array(vec![Value::Object(obj)]));
            Value::Object(wrapped)
        }
        other => other,
    };
    policy_from_value(&value)
}

fn replace_smart_quotes(text: &str) -> String {
    text.replace(['\u{201c}', '\u{201d}'], "\"")
}

/// Removes `//` line comments and `/* */` block comments outside string literals.
fn strip_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    let mut in_string = false;
    while let Some(c) = chars.next() {
        if in_string {
            out.push(c);
            match c {
                '\\' => {
                    if let Some(next) = chars.next() {
                        out.push(next);
                    }
                }
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match (c, chars.peek()) {
            ('"', _) => {
                in_string = true;
                out.push(c);
            }
            ('/', Some('/')) => {
                for skipped in chars.by_ref() {
                    if skipped == '\n' {
                        out.push('\n');
                        break;
                    }
                }
            }
            ('/', Some('*')) => {
                chars.next();
                let mut prev = '\0';
                for skipped in chars.by_ref() {
                    if prev == '*' && skipped == '/' {
                        break;
                    }
                    prev = skipped;
                }
            }
            _ => out.push(c),
        }
    }
    out
}

/// Drops commas that directly precede `}` or `]` (ignoring whitespace).
fn strip_trailing_commas(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if in_string {
            out.push(c);
            if c == '\\' && i + 1 < chars.len() {
                out.push(chars[i + 1]);
                i += 1;
            } else if c == '"' {
                in_string = false;
            }
        } else if c == '"' {
            in_string = true;
            out.push(c);
        } else if c == ',' {
            let next = chars[i + 1..].iter().find(|ch| !ch.is_whitespace());
            if !matches!(next, Some('}') | Some(']')) {
                out.push(c);
            }
        } else {
            out.push(c);
        }
        i += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CorpusStats {
    pub total_policies: usize,
    pub total_statements: usize,
    pub avg_statements_per_policy: f64,
    pub min_statements_per_policy: usize,
    pub max_statements_per_policy: usize,
    pub unique_services: usize,
    pub unique_actions: usize,
    pub unique_resource_types: usize,
    pub cross_service_policies: usize,
    pub allow_count: usize,
    pub deny_count: usize,
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |n: usize| 100.0 * n as f64 / self.total_statements.max(1) as f64;
        writeln!(f, "{:<28} {:>8}", "Total Policies", self.total_policies)?;
        writeln!(f, "{:<28} {:>8}", "Total Statements", self.total_statements)?;
        writeln!(
            f,
            "{:<28} {:>8.2}",
            "Avg. Statements per Policy", self.avg_statements_per_policy
        )?;
        writeln!(
            f,
            "{:<28} {:>8}",
            "Min Statements per Policy", self.min_statements_per_policy
        )?;
        writeln!(
            f,
            "{:<28} {:>8}",
            "Max Statements per Policy", self.max_statements_per_policy
        )?;
        writeln!(f, "{:<28} {:>8}", "Unique Services", self.unique_services)?;
        writeln!(f, "{:<28} {:>8}", "Unique Actions", self.unique_actions)?;
        writeln!(f, "{:<28} {:>8}", "Unique Resource Types", self.unique_resource_types)?;
        writeln!(f, "{:<28} {:>8}", "Cross-Service Policies", self.cross_service_policies)?;
        writeln!(
            f,
            "{:<28} {:>8} ({:.1}%)",
            "Allow",
            self.allow_count,
            pct(self.allow_count)
        )?;
        write!(
            f,
            "{:<28} {:>8} ({:.1}%)",
            "Deny",
            self.deny_count,
            pct(self.deny_count)
        )
    }
}

/// Service prefix of an action pattern (`s3:GetObject` -> `s3`), lowercased.
/// Patterns without a `:` (such as `*`) name no service.
pub fn action_service(action: &str) -> Option<String> {
    action.split_once(':').map(|(service, _)| service.to_ascii_lowercase())
}

/// Resource-type classification used for corpus statistics.
///
/// - `*` is its own type.
/// - Non-ARN strings classify as `other`.
/// - S3 ARNs are `s3:bucket` (no `/` in the resource part) or `s3:object`.
/// - Other ARNs are `service:type`, where `type` is the resource part up to
///   the first `/` or `:`; a resource part without a separator yields
///   `service:resource`.
pub fn resource_type(resource: &str) -> String {
    if resource == "*" {
        return "*".into();
    }
    let parts: Vec<&str> = resource.splitn(6, ':').collect();
    if parts.len() < 6 || parts[0] != "arn" {
        return "other".into();
    }
    let service = parts[2].to_ascii_lowercase();
    let rest = parts[5];
    if service == "s3" {
        return if rest.contains('/') { "s3:object" } else { "s3:bucket" }.into();
    }
    match rest.find(['/', ':']) {
        Some(pos) if pos > 0 => format!("{service}:{}", &rest[..pos]),
        _ => format!("{service}:resource"),
    }
}

pub fn corpus_stats(policies: &[Policy]) -> Result<CorpusStats, PolicyError> {
    if policies.is_empty() {
        return Err(PolicyError::EmptyCorpus);
    }
    let mut services = BTreeSet::new();
    let mut actions = BTreeSet::new();
    let mut resource_types = BTreeSet::new();
    let mut allow_count = 0;
    let mut deny_count = 0;
    let mut cross_service = 0;
    let mut total_statements = 0;
    let mut min = usize::MAX;
    let mut max = 0;

    for policy in policies {
        let count = policy.statements.len();
        total_statements += count;
        min = min.min(count);
        max = max.max(count);
        let mut policy_services = BTreeSet::new();
        for stmt in &policy.statements {
            match stmt.effect {
                Effect::Allow => allow_count += 1,
                Effect::Deny => deny_count += 1,
            }
            for action in &stmt.action {
                actions.insert(action.to_ascii_lowercase());
                if let Some(service) = action_service(action) {
                    policy_services.insert(service);
                }
            }
            for resource in &stmt.resource {
                resource_types.insert(resource_type(resource));
            }
        }
        if policy_services.len() > 1 {
            cross_service += 1;
        }
        services.extend(policy_services);
    }

    Ok(CorpusStats {
        total_policies: policies.len(),
        total_statements,
        avg_statements_per_policy: total_statements as f64 / policies.len() as f64,
        min_statements_per_policy: min,
        max_statements_per_policy: max,
        unique_services: services.len(),
        unique_actions: actions.len(),
        unique_resource_types: resource_types.len(),
        cross_service_policies: cross_service,
        allow_count,
        deny_count,
    })
}
