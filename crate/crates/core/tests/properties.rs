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

mod common;

use common::{oracle_verdict, random_policy, random_request, random_spec, sample_corpus, uniform_request};
use policy_repair::batch::load_corpus;
use policy_repair::generate::generate_suite;
use policy_repair::stats::bin_accuracies;
use policy_repair::synth::{exact_statement, synthesize_rule_based};
use policy_repair::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn tuple(r: &AccessRequest) -> String {
    format!("{:?}", (&r.principal, &r.action, &r.resource, &r.context))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn round_trip_and_idempotent_normalization(seed in any::<u64>()) {
        let policy = random_policy(&mut rng(seed), 5);
        let text = policy.to_canonical_json();
        let first = parse_policy(&text).unwrap();
        prop_assert_eq!(&first, &policy);
        prop_assert_eq!(parse_policy(&first.to_canonical_json()).unwrap(), first);

        // Damage the text the way hand-edited policies are damaged.
        let messy = format!("// exported\n{}", text.replacen("]", ",]", 1).replace('"', "\u{201c}"));
        let once = normalize_policy(&messy).unwrap();
        let twice = normalize_policy(&once.to_canonical_json()).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn stats_effect_counts_partition(seeds in proptest::collection::vec(any::<u64>(), 1..8)) {
        let policies: Vec<Policy> = seeds.iter().map(|&s| random_policy(&mut rng(s), 5)).collect();
        let stats = corpus_stats(&policies).unwrap();
        prop_assert_eq!(stats.allow_count + stats.deny_count, stats.total_statements);
    }

    #[test]
    fn evaluate_agrees_with_regex_oracle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let policy = random_policy(&mut r, 4);
        for _ in 0..8 {
            let req = random_request(&mut r, Effect::Allow);
            prop_assert_eq!(evaluate(&policy, &req).verdict, oracle_verdict(&policy, &req));
            // Pure: repeated calls agree.
            prop_assert_eq!(evaluate(&policy, &req), evaluate(&policy, &req));
        }
    }

    #[test]
    fn adding_statements_is_monotone(seed in any::<u64>()) {
        let mut r = rng(seed);
        let policy = random_policy(&mut r, 4);
        let extra = common::random_statement(&mut r, 99);
        let req = random_request(&mut r, Effect::Allow);
        let before = evaluate(&policy, &req).verdict;
        let mut grown = policy.clone();
        grown.statements.push(extra.clone());
        let after = evaluate(&grown, &req).verdict;
        match extra.effect {
            Effect::Allow => prop_assert!(!(before == Verdict::Allow && after != Verdict::Allow)),
            Effect::Deny => prop_assert!(!(before != Verdict::Allow && after == Verdict::Allow)),
        }
    }

    #[test]
    fn accuracy_is_permutation_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let policy = random_policy(&mut r, 5);
        let spec = random_spec(&mut r, 10, false);
        let base = validate_goal(&policy, &spec).unwrap();

        let mut shuffled_policy = policy.clone();
        shuffled_policy.statements.shuffle(&mut r);
        let (mut allow, mut deny) = (spec.must_allow.clone(), spec.must_deny.clone());
        allow.shuffle(&mut r);
        deny.shuffle(&mut r);
        let shuffled = validate_goal(&shuffled_policy, &RequestSpec::new(allow, deny)).unwrap();
        prop_assert_eq!(base.correct_count, shuffled.correct_count);
        prop_assert_eq!(base.accuracy_percent, shuffled.accuracy_percent);
    }

    #[test]
    fn localize_is_ordered_and_certified(seed in any::<u64>()) {
        let mut r = rng(seed);
        let policy = random_policy(&mut r, 5);
        let spec = random_spec(&mut r, 8, false);
        let validation = validate_goal(&policy, &spec).unwrap();
        prop_assume!(!validation.passed());
        let report = localize(&policy, &validation).unwrap();
        let order: Vec<String> = validation.misclassified().map(|(q, _)| tuple(q)).collect();
        let got: Vec<String> = report.entries.iter().map(|e| tuple(&e.request)).collect();
        prop_assert_eq!(order, got);
        for entry in &report.entries {
            prop_assert!(entry.responsible.windows(2).all(|w| w[0] < w[1]));
            if entry.case == FaultCase::MissingAllow {
                prop_assert_eq!(evaluate(&policy, &entry.request).verdict, Verdict::ImplicitDeny);
            }
        }
        prop_assert_eq!(localize(&policy, &validation).unwrap(), report);
    }

    #[test]
    fn fl_prompt_extends_base_prompt(seed in any::<u64>()) {
        let mut r = rng(seed);
        let policy = random_policy(&mut r, 4);
        let spec = random_spec(&mut r, 6, false);
        let validation = validate_goal(&policy, &spec).unwrap();
        prop_assume!(!validation.passed());
        let report = localize(&policy, &validation).unwrap();
        let ctx = PromptContext { policy: &policy, spec: &spec, report: Some(&report), iteration: 1, accuracy_percent: validation.accuracy_percent };
        let base = build_base_prompt(&ctx);
        let fl = build_fl_prompt(&ctx).unwrap();
        prop_assert_eq!(&fl, &build_fl_prompt(&ctx).unwrap());
        let blocks_end = base.user.find("\nIteration:").unwrap();
        prop_assert!(fl.user.contains(&base.user[..blocks_end]));

        let fault = &fl.user[fl.user.find("FAULT LOCALIZATION:").unwrap()..];
        let headings = [FaultCase::WrongExplicitAllow, FaultCase::MissingAllow, FaultCase::WrongExplicitDeny];
        let mut sections = Vec::new();
        for case in headings {
            if let Some(pos) = fault.find(case.heading()) {
                sections.push((pos, case));
            }
        }
        sections.sort_by_key(|(p, _)| *p);
        for entry in &report.entries {
            let needle = format!("    Action: [{}]\n    Resource: [{}]\n", entry.request.action, entry.request.resource);
            let hits: Vec<usize> = fault.match_indices(&needle).map(|(i, _)| i).collect();
            let same = report.entries.iter().filter(|e| e.request.action == entry.request.action && e.request.resource == entry.request.resource).count();
            prop_assert_eq!(hits.len(), same);
            // The first hit sits under its own heading.
            let under = sections.iter().rev().find(|(p, _)| *p < hits[0]).map(|(_, c)| *c);
            let same_case = report.entries.iter().any(|e| e.request.action == entry.request.action && e.request.resource == entry.request.resource && Some(e.case) == under);
            prop_assert!(same_case);
        }
    }

    #[test]
    fn exact_statements_match_one_tuple(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = uniform_request(&mut r, Effect::Allow);
        let b = uniform_request(&mut r, Effect::Allow);
        let stmt = exact_statement(Effect::Allow, &a, "X".into());
        prop_assert!(statement_matches(&stmt, &a));
        let same_tuple = a.principal == b.principal
            && a.action.eq_ignore_ascii_case(&b.action)
            && a.resource == b.resource
            && a.context == b.context;
        prop_assert_eq!(statement_matches(&stmt, &b), same_tuple);
    }

    #[test]
    fn allow_and_deny_rules_keep_correct_requests(seed in any::<u64>()) {
        let mut r = rng(seed);
        let policy = random_policy(&mut r, 4);
        let spec = random_spec(&mut r, 10, true);
        prop_assume!(spec.contradictions() == 0);
        let validation = validate_goal(&policy, &spec).unwrap();
        prop_assume!(!validation.passed());
        let report = localize(&policy, &validation).unwrap();
        prop_assume!(report.entries.iter().all(|e| e.case != FaultCase::WrongExplicitDeny));
        let result = synthesize_rule_based(&policy, &report, &spec).unwrap();
        let again = synthesize_rule_based(&policy, &report, &spec).unwrap();
        prop_assert_eq!(&result.candidate, &again.candidate);
        let after = validate_goal(&result.candidate, &spec).unwrap();
        prop_assert_eq!(after.correct_count, after.total_count);
    }

    #[test]
    fn extraction_inverts_embedding(seed in any::<u64>(), fenced in any::<bool>()) {
        let policy = random_policy(&mut rng(seed), 4);
        let text = policy.to_canonical_json();
        let raw = if fenced {
            format!("Here is the fix.\n```json\n{text}\n```\nDone.")
        } else {
            format!("The repaired policy is {text} and nothing else changed.")
        };
        prop_assert_eq!(extract_policy_from_response(&raw).unwrap(), normalize_policy(&text).unwrap());
    }

    #[test]
    fn repair_never_regresses(seed in any::<u64>(), fl in any::<bool>()) {
        let mut r = rng(seed);
        let policy = random_policy(&mut r, 4);
        let spec = random_spec(&mut r, 10, true);
        prop_assume!(spec.contradictions() == 0 && !spec.is_empty());
        let cfg = RepairConfig {
            mode: if fl { PromptMode::FaultLocalization } else { PromptMode::Base },
            synthesizer: SynthesizerConfig::rule_based(),
            ..RepairConfig::default()
        };
        let outcome = match repair(&policy, &spec, &cfg) {
            Ok(outcome) => outcome,
            Err(RepairError::SynthesizerUnavailable(_)) => {
                // Only wildcard-matched explicit denies are beyond the rules.
                let validation = validate_goal(&policy, &spec).unwrap();
                let report = localize(&policy, &validation).unwrap();
                prop_assert!(report.entries.iter().all(|e| e.case == FaultCase::WrongExplicitDeny));
                return Ok(());
            }
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert!(outcome.best_accuracy_percent >= outcome.initial_accuracy_percent);
        let recheck = validate_goal(&outcome.best_policy, &spec).unwrap();
        prop_assert_eq!(recheck.accuracy_percent, outcome.best_accuracy_percent);
        prop_assert_eq!(outcome.trace.len(), outcome.iterations_used);
        prop_assert!(outcome.iterations_used <= cfg.max_iterations);
        if let Some(last) = outcome.trace.iter().rev().find(|t| t.accepted) {
            let digest = outcome.best_policy.fingerprint();
            prop_assert_eq!(last.candidate_digest.as_deref(), Some(digest.as_str()));
            prop_assert_eq!(last.accuracy_percent, Some(outcome.best_accuracy_percent));
        }
        prop_assert_eq!(outcome.status == RepairStatus::CompleteRepair, outcome.best_accuracy_percent == 100.0);
    }

    #[test]
    fn bins_are_exhaustive_and_exclusive(accs in proptest::collection::vec(0.0f64..=100.0, 0..30), edge in prop_oneof![Just(80.0), Just(100.0), Just(79.99)]) {
        let mut all = accs.clone();
        all.push(edge);
        let bins = bin_accuracies(all.iter().copied());
        prop_assert_eq!(bins.total(), all.len());
        prop_assert_eq!(bins.complete, all.iter().filter(|&&a| a == 100.0).count());
        prop_assert_eq!(bins.moderate, all.iter().filter(|&&a| (80.0..100.0).contains(&a)).count());
    }

    #[test]
    fn welch_is_symmetric(a in proptest::collection::vec(0.0f64..100.0, 2..20), b in proptest::collection::vec(0.0f64..100.0, 2..20)) {
        if let (Ok(ab), Ok(ba)) = (welch_ttest(&a, &b), welch_ttest(&b, &a)) {
            prop_assert!((ab.p_two_tailed - ba.p_two_tailed).abs() < 1e-12);
            prop_assert!((ab.t + ba.t).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&ab.p_two_tailed));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generator_laws_on_corpus(index in 0usize..26, n in 1usize..=50, rho_tenths in 0u32..=3, seed in any::<u64>()) {
        let (policies, _) = load_corpus(&sample_corpus()).unwrap();
        let (_, policy) = &policies[index % policies.len()];
        let rho = rho_tenths as f64 / 10.0;
        let cfg = GenConfig::new(n, rho, seed);
        let suite = generate_suite(policy, &cfg).unwrap();
        prop_assert_eq!(suite.allowed_sampled, n * 6 / 10);
        prop_assert_eq!(suite.allowed_sampled + suite.denied_sampled, n);
        let v = validate_goal(policy, &suite.spec).unwrap();
        prop_assert_eq!(v.correct_count, n - (rho * n as f64 + 1e-9).floor() as usize);
        let mut tuples: Vec<String> = suite.spec.requests().map(tuple).collect();
        tuples.sort();
        tuples.dedup();
        prop_assert_eq!(tuples.len(), n);
        prop_assert_eq!(generate_requests(policy, &cfg).unwrap(), suite.spec);
    }
}
