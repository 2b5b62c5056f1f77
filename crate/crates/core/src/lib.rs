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

//! Verifiable repair of IAM-style access-control policies.
//!
//! A faulty policy is checked against must-allow / must-deny requests, the
//! misclassifications are traced back to statements, a synthesizer proposes a
//! candidate, and the candidate is re-validated. The loop keeps the most
//! accurate candidate seen.

pub mod batch;
pub mod eval;
pub mod generate;
mod lexicon;
pub mod localize;
pub mod pattern;
pub mod policy;
pub mod prompt;
pub mod repair;
pub mod smt;
pub mod stats;
pub mod synth;

pub use batch::{run_batch, BatchConfig, BatchReport};
pub use eval::{
    evaluate, statement_matches, validate_goal, AccessRequest, Decision, EvalError, RequestIdentity, RequestSpec,
    ValidationResult, ValidationStatus, Verdict,
};
pub use generate::{generate_requests, GenConfig, PolicyElements};
pub use localize::{localize, universal_allow, FaultCase, FaultEntry, FaultReport, LocalizeError};
pub use pattern::match_pattern;
pub use policy::{
    corpus_stats, normalize_policy, parse_policy, ConditionClause, ConditionOperator, CorpusStats, Effect, Policy,
    PolicyError, Statement,
};
pub use prompt::{build_base_prompt, build_fl_prompt, Prompt, PromptContext, PromptMode};
pub use repair::{repair, RepairConfig, RepairError, RepairOutcome, RepairStatus};
pub use smt::encode_smtlib;
pub use stats::{welch_ttest, Bins};
pub use synth::{extract_policy_from_response, Backend, SynthesizerConfig};
