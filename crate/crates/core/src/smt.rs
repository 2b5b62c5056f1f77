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

//! SMT-LIB v2 emission of the allow question for one (policy, request) pair.
//!
//! The script is satisfiable exactly when the policy allows the request.
//! Patterns become regular-expression membership constraints over string
//! variables; the request's concrete values are asserted as equalities.

use std::fmt::Write;

use crate::eval::{AccessRequest, MatchOptions};
use crate::policy::{ConditionClause, ConditionOperator, Effect, Policy, Statement};

pub fn encode_smtlib(policy: &Policy, req: &AccessRequest) -> String {
    encode_smtlib_with(policy, req, MatchOptions::default())
}

pub fn encode_smtlib_with(policy: &Policy, req: &AccessRequest, opts: MatchOptions) -> String {
    let mut out = String::new();
    out.push_str("(set-logic QF_S)\n");
    out.push_str("(declare-const action String)\n");
    out.push_str("(declare-const resource String)\n");
    out.push_str("(declare-const principal String)\n");
    out.push_str("(declare-const has_principal Bool)\n");
    let ctx = req.context_pairs();
    for i in 0..ctx.len() {
        let _ = writeln!(out, "(declare-const ctx_{i} String)");
    }

    let _ = writeln!(out, "(assert (= action {}))", string_literal(&req.action));
    let _ = writeln!(out, "(assert (= resource {}))", string_literal(&req.resource));
    match &req.principal {
        Some(p) => {
            out.push_str("(assert has_principal)\n");
            let _ = writeln!(out, "(assert (= principal {}))", string_literal(p));
        }
        None => out.push_str("(assert (not has_principal))\n"),
    }
    for (i, (key, value)) in ctx.iter().enumerate() {
        let _ = writeln!(out, "; context {}", key.replace('\n', " "));
        let _ = writeln!(out, "(assert (= ctx_{i} {}))", string_literal(value));
    }

    let mut allows = Vec::new();
    let mut denies = Vec::new();
    for (i, stmt) in policy.statements.iter().enumerate() {
        let name = format!("stmt_{i}");
        let _ = writeln!(
            out,
            "(define-fun {name} () Bool {})",
            statement_formula(stmt, ctx, opts)
        );
        match stmt.effect {
            Effect::Allow => allows.push(name),
            Effect::Deny => denies.push(name),
        }
    }
    let _ = writeln!(
        out,
        "(assert (and {} (not {})))",
        disjunction(&allows),
        disjunction(&denies)
    );
    out.push_str("(check-sat)\n");
    out
}

fn statement_formula(stmt: &Statement, ctx: &[(String, String)], opts: MatchOptions) -> String {
    let principal = match &stmt.principal {
        None => "true".to_string(),
        Some(patterns) => format!(
            "(and has_principal {})",
            disjunction(
                &patterns
                    .iter()
                    .map(|p| membership("principal", p, false))
                    .collect::<Vec<_>>()
            )
        ),
    };
    let action = disjunction(
        &stmt
            .action
            .iter()
            .map(|p| membership("action", p, opts.action_case_insensitive))
            .collect::<Vec<_>>(),
    );
    let resource = disjunction(
        &stmt
            .resource
            .iter()
            .map(|p| membership("resource", p, opts.resource_case_insensitive))
            .collect::<Vec<_>>(),
    );
    let mut parts = vec![principal, action, resource];
    parts.extend(stmt.conditions().iter().map(|c| clause_formula(c, ctx)));
    format!("(and {})", parts.join(" "))
}

fn clause_formula(clause: &ConditionClause, ctx: &[(String, String)]) -> String {
    let mut options = Vec::new();
    for (i, (key, _)) in ctx.iter().enumerate() {
        if *key != clause.key {
            continue;
        }
        let var = format!("ctx_{i}");
        for value in &clause.values {
            options.push(match clause.operator {
                ConditionOperator::StringEquals => format!("(= {var} {})", string_literal(value)),
                ConditionOperator::StringLike => membership(&var, value, false),
            });
        }
    }
    disjunction(&options)
}

fn membership(var: &str, pattern: &str, case_insensitive: bool) -> String {
    format!("(str.in_re {var} {})", pattern_regex(pattern, case_insensitive))
}

fn disjunction(items: &[String]) -> String {
    match items.len() {
        0 => "false".into(),
        1 => items[0].clone(),
        _ => format!("(or {})", items.join(" ")),
    }
}

/// Translates a `*`/`?` pattern into an SMT-LIB regular expression.
pub fn pattern_regex(pattern: &str, case_insensitive: bool) -> String {
    let mut pieces = Vec::new();
    let mut literal = String::new();
    let flush = |literal: &mut String, pieces: &mut Vec<String>| {
        if !literal.is_empty() {
            pieces.push(format!("(str.to_re {})", string_literal(literal)));
            literal.clear();
        }
    };
    for c in pattern.chars() {
        match c {
            '*' => {
                flush(&mut literal, &mut pieces);
                pieces.push("re.all".into());
            }
            '?' => {
                flush(&mut literal, &mut pieces);
                pieces.push("re.allchar".into());
            }
            c if case_insensitive && case_variants(c).len() > 1 => {
                flush(&mut literal, &mut pieces);
                let alts: Vec<String> = case_variants(c)
                    .into_iter()
                    .map(|v| format!("(str.to_re {})", string_literal(&v.to_string())))
                    .collect();
                pieces.push(format!("(re.union {})", alts.join(" ")));
            }
            c => literal.push(c),
        }
    }
    flush(&mut literal, &mut pieces);
    match pieces.len() {
        0 => "(str.to_re \"\")".into(),
        1 => pieces.pop().unwrap(),
        _ => format!("(re.++ {})", pieces.join(" ")),
    }
}

fn case_variants(c: char) -> Vec<char> {
    let mut out = vec![c];
    for v in c.to_lowercase().chain(c.to_uppercase()) {
        if !out.contains(&v) && v.to_lowercase().eq(c.to_lowercase()) {
            out.push(v);
        }
    }
    // Multi-char case mappings have no single-char counterpart.
    out.retain(|v| v.to_lowercase().count() == 1);
    out
}

/// SMT-LIB 2.6 string literal: `"` doubles, anything outside printable ASCII
/// (and the backslash, which would start an escape) becomes `\u{..}`.
pub fn string_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\"\""),
            '\\' => out.push_str("\\u{5c}"),
            ' '..='~' => out.push(c),
            _ => {
                let _ = write!(out, "\\u{{{:x}}}", c as u32);
            }
        }
    }
    out.push('"');
    out
}
