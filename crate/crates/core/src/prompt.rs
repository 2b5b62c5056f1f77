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

//! Repair prompt rendering, in a base form and a fault-localization form.
//!
//! Both forms share the same system instruction and layout template; the
//! fault-localization form adds a block grouping every fault under the
//! heading for its case.

use std::fmt;

use thiserror::Error;

use crate::eval::{AccessRequest, RequestSpec};
use crate::localize::{FaultCase, FaultEntry, FaultReport};
use crate::policy::{Effect, Policy};

pub const SYSTEM_PROMPT: &str = include_str!("../templates/system_prompt.v1.txt");
pub const REPAIR_TEMPLATE: &str = include_str!("../templates/repair_prompt.v1.txt");
pub const TEMPLATE_VERSION: &str = "v1";

const HEADING_ORDER: [FaultCase; 3] = [
    FaultCase::WrongExplicitAllow,
    FaultCase::MissingAllow,
    FaultCase::WrongExplicitDeny,
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("fault report was computed for a different policy")]
    FingerprintMismatch,
    #[error("fault-localization prompt requires a fault report")]
    MissingReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PromptMode {
    Base,
    FaultLocalization,
}

#[derive(Debug, Clone)]
pub struct PromptContext<'a> {
    pub policy: &'a Policy,
    pub spec: &'a RequestSpec,
    pub report: Option<&'a FaultReport>,
    pub iteration: usize,
    pub accuracy_percent: f64,
}

/// A rendered prompt: the shared system instruction and the user message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

impl Prompt {
    pub fn digest(&self) -> String {
        crate::policy::digest_hex(self.to_string().as_bytes())
    }
}

impl fmt::Display for Prompt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\n{}", self.system, self.user)
    }
}

pub fn build_base_prompt(ctx: &PromptContext<'_>) -> Prompt {
    render(ctx, "")
}

pub fn build_fl_prompt(ctx: &PromptContext<'_>) -> Result<Prompt, PromptError> {
    let report = ctx.report.ok_or(PromptError::MissingReport)?;
    if report.policy_fingerprint != ctx.policy.fingerprint() {
        return Err(PromptError::FingerprintMismatch);
    }
    Ok(render(ctx, &fault_block(ctx.policy, report)))
}

pub fn build_prompt(mode: PromptMode, ctx: &PromptContext<'_>) -> Result<Prompt, PromptError> {
    match mode {
        PromptMode::Base => Ok(build_base_prompt(ctx)),
        PromptMode::FaultLocalization => build_fl_prompt(ctx),
    }
}

fn render(ctx: &PromptContext<'_>, fault_localization: &str) -> Prompt {
    let user = REPAIR_TEMPLATE
        .replace("{{policy}}", &ctx.policy.to_canonical_json())
        .replace("{{requests}}", &requests_block(ctx.spec))
        .replace("{{fault_localization}}", fault_localization)
        .replace("{{iteration}}", &ctx.iteration.to_string())
        .replace("{{accuracy}}", &format!("{:.2}", ctx.accuracy_percent));
    Prompt {
        system: SYSTEM_PROMPT.to_string(),
        user,
    }
}

fn list(value: &str) -> String {
    format!("[{value}]")
}

fn context_list(req: &AccessRequest) -> Option<String> {
    req.context.as_ref().map(|ctx| {
        list(
            &ctx.iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(", "),
        )
    })
}

/// Each request as a blank-line-separated group of `Field: value` lines.
fn requests_block(spec: &RequestSpec) -> String {
    let mut out = String::new();
    for req in spec.requests() {
        let mut fields = vec![format!("Effect: {}", req.expected)];
        if let Some(p) = &req.principal {
            fields.push(format!("Principal: {}", list(p)));
        }
        fields.push(format!("Action: {}", list(&req.action)));
        fields.push(format!("Resource: {}", list(&req.resource)));
        if let Some(ctx) = context_list(req) {
            fields.push(format!("Condition: {ctx}"));
        }
        out.push('\n');
        for (i, field) in fields.iter().enumerate() {
            out.push_str("  ");
            out.push_str(field);
            if i + 1 < fields.len() {
                out.push(',');
            }
            out.push('\n');
        }
    }
    out
}

fn effect_word(effect: Effect) -> &'static str {
    match effect {
        Effect::Allow => "allow",
        Effect::Deny => "deny",
    }
}

fn fault_block(policy: &Policy, report: &FaultReport) -> String {
    let mut out = String::from("\nFAULT LOCALIZATION:\n");
    for case in HEADING_ORDER {
        let entries: Vec<&FaultEntry> = report.entries.iter().filter(|e| e.case == case).collect();
        if entries.is_empty() {
            continue;
        }
        out.push_str(&format!("\n  {}\n", case.heading()));
        for entry in entries {
            out.push_str(&fault_entry(policy, entry));
        }
    }
    out
}

fn fault_entry(policy: &Policy, entry: &FaultEntry) -> String {
    let req = &entry.request;
    let mut lines = Vec::new();
    if let Some(p) = &req.principal {
        lines.push(format!("Principal: {}", list(p)));
    }
    lines.push(format!("Action: {}", list(&req.action)));
    lines.push(format!("Resource: {}", list(&req.resource)));
    if let Some(ctx) = context_list(req) {
        lines.push(format!("Condition: {ctx}"));
    }
    lines.push(format!(
        "Expected: {}, Got: {}",
        effect_word(req.expected),
        effect_word(req.expected.flip())
    ));
    let responsible = if entry.responsible.is_empty() {
        "None (missing allow)".to_string()
    } else {
        entry
            .responsible
            .iter()
            .map(|&i| {
                policy
                    .statements
                    .get(i)
                    .map(|s| s.label(i))
                    .unwrap_or_else(|| format!("stmt[{i}]"))
            })
            .collect::<Vec<_>>()
            .join(", ")
    };
    lines.push(format!("Responsible stmt: {responsible}"));

    let mut out = String::from("\n");
    for line in lines {
        out.push_str("    ");
        out.push_str(&line);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::validate_goal;
    use crate::localize::localize;
    use crate::policy::{parse_policy, Statement};

    fn policy() -> Policy {
        Policy::new(vec![Statement::new(
            Effect::Allow,
            vec!["s3:GetObject".into()],
            vec!["*".into()],
        )])
    }

    #[test]
    fn base_prompt_without_denies_has_no_empty_sections() {
        let p = policy();
        let spec = RequestSpec::new(
            vec![AccessRequest::new("s3:GetObject", "arn:aws:s3:::b/k", Effect::Allow)],
            vec![],
        );
        let prompt = build_base_prompt(&PromptContext {
            policy: &p,
            spec: &spec,
            report: None,
            iteration: 3,
            accuracy_percent: 80.0,
        });
        let text = prompt.to_string();
        assert!(text.contains("POLICY:\n{"));
        assert!(
            text.contains("REQUESTS:\n\n  Effect: Allow,\n  Action: [s3:GetObject],\n  Resource: [arn:aws:s3:::b/k]\n")
        );
        assert!(!text.contains("Effect: Deny"));
        assert!(!text.contains("FAULT LOCALIZATION"));
        assert!(!text.contains("\n\n\n"));
        assert!(text.ends_with("Iteration: 3, Accuracy: 80.00%\n"));
    }

    #[test]
    fn principal_and_condition_are_rendered() {
        let p = policy();
        let req = AccessRequest::new("s3:GetObject", "r", Effect::Deny)
            .with_principal("arn:aws:iam::1:user/a")
            .with_context(vec![("aws:SourceIp".into(), "10.0.0.1".into())]);
        let spec = RequestSpec::new(vec![], vec![req]);
        let text = build_base_prompt(&PromptContext {
            policy: &p,
            spec: &spec,
            report: None,
            iteration: 1,
            accuracy_percent: 0.0,
        })
        .to_string();
        assert!(text.contains("  Effect: Deny,\n  Principal: [arn:aws:iam::1:user/a],\n  Action: [s3:GetObject],\n  Resource: [r],\n  Condition: [aws:SourceIp=10.0.0.1]\n"));
    }

    #[test]
    fn only_missing_allow_heading() {
        let p = parse_policy(r#"{"Statement":[{"Effect":"Allow","Action":"s3:GetObject","Resource":"*"}]}"#).unwrap();
        let spec = RequestSpec::new(vec![AccessRequest::new("sqs:SendMessage", "q", Effect::Allow)], vec![]);
        let v = validate_goal(&p, &spec).unwrap();
        let report = localize(&p, &v).unwrap();
        let ctx = PromptContext {
            policy: &p,
            spec: &spec,
            report: Some(&report),
            iteration: 1,
            accuracy_percent: v.accuracy_percent,
        };
        let text = build_fl_prompt(&ctx).unwrap().to_string();
        assert!(text.contains("SHOULD BE ALLOWED BUT IMPLICITLY DENIED"));
        assert!(!text.contains("EXPLICITLY"));
        assert!(text.contains("Responsible stmt: None (missing allow)"));
    }

    #[test]
    fn fl_prompt_errors() {
        let p = policy();
        let spec = RequestSpec::new(vec![AccessRequest::new("sqs:SendMessage", "q", Effect::Allow)], vec![]);
        let ctx = PromptContext {
            policy: &p,
            spec: &spec,
            report: None,
            iteration: 1,
            accuracy_percent: 0.0,
        };
        assert_eq!(build_fl_prompt(&ctx), Err(PromptError::MissingReport));
        let stale = FaultReport {
            entries: vec![],
            policy_fingerprint: "0".into(),
        };
        let ctx = PromptContext {
            report: Some(&stale),
            ..ctx
        };
        assert_eq!(build_fl_prompt(&ctx), Err(PromptError::FingerprintMismatch));
    }
}
