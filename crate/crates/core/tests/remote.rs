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

use std::time::Duration;

use common::stub::{completion, Stub};
use policy_repair::synth::{synthesize_remote, RemoteSynthesizer, SynthError, Synthesizer};
use policy_repair::*;

const POLICY: &str =
    r#"{"Version":"2012-10-17","Statement":[{"Sid":"Read","Effect":"Allow","Action":"s3:GetObject","Resource":"*"}]}"#;

fn prompt() -> Prompt {
    Prompt {
        system: "system text".into(),
        user: "user text".into(),
    }
}

fn config(url: &str, key_env: &str, retry_limit: usize) -> SynthesizerConfig {
    let mut cfg = SynthesizerConfig::remote(url, "stub-model");
    cfg.api_key_env = Some(key_env.into());
    cfg.retry_limit = retry_limit;
    cfg.retry_backoff_ms = 0;
    cfg.request_timeout_ms = 5_000;
    cfg
}

#[test]
fn echo_sends_chat_completion_body() {
    std::env::set_var("REMOTE_TEST_KEY_ECHO", "secret");
    let stub = Stub::start(vec![(200, completion(&format!("```json\n{POLICY}\n```")))]);
    let mut cfg = config(&stub.url, "REMOTE_TEST_KEY_ECHO", 3);
    cfg.temperature = 0.0;
    cfg.max_output_tokens = 512;
    let result = synthesize_remote(&prompt(), &cfg).unwrap();
    let seen = stub.requests();
    stub.join();

    assert_eq!(result.candidate, parse_policy(POLICY).unwrap());
    assert_eq!(result.backend_used, Backend::Remote);
    assert_eq!(result.attempts, 1);
    assert!(result.raw_output.contains("```json"));
    assert_eq!(seen[0].authorization.as_deref(), Some("Bearer secret"));
    let body = &seen[0].body;
    assert_eq!(body["model"], "stub-model");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["max_tokens"], 512);
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][0]["content"], "system text");
    assert_eq!(body["messages"][1]["role"], "user");
    assert_eq!(body["messages"][1]["content"], "user text");
}

#[test]
fn server_errors_are_retried_then_succeed() {
    std::env::set_var("REMOTE_TEST_KEY_RETRY", "k");
    let stub = Stub::start(vec![(500, "{}".into()), (500, "{}".into()), (200, completion(POLICY))]);
    let result = synthesize_remote(&prompt(), &config(&stub.url, "REMOTE_TEST_KEY_RETRY", 3)).unwrap();
    assert_eq!(stub.requests().len(), 3);
    stub.join();
    assert_eq!(result.attempts, 3);
}

#[test]
fn exhausted_retries_report_transport() {
    std::env::set_var("REMOTE_TEST_KEY_EXHAUST", "k");
    let stub = Stub::start(vec![(503, "{}".into()), (503, "{}".into())]);
    let err = synthesize_remote(&prompt(), &config(&stub.url, "REMOTE_TEST_KEY_EXHAUST", 2)).unwrap_err();
    stub.join();
    assert!(
        matches!(err, SynthError::Transport(ref m) if m.contains("503")),
        "{err:?}"
    );
}

#[test]
fn prose_only_is_an_extraction_failure() {
    std::env::set_var("REMOTE_TEST_KEY_PROSE", "k");
    let stub = Stub::start(vec![(200, completion("Sorry, I cannot help with that."))]);
    let err = synthesize_remote(&prompt(), &config(&stub.url, "REMOTE_TEST_KEY_PROSE", 1)).unwrap_err();
    stub.join();
    assert!(
        matches!(err, SynthError::ExtractionFailed { attempts: 1, .. }),
        "{err:?}"
    );
}

#[test]
fn missing_credential_is_reported_before_any_request() {
    std::env::remove_var("REMOTE_TEST_KEY_ABSENT");
    let err = synthesize_remote(
        &prompt(),
        &config("http://127.0.0.1:9/unused", "REMOTE_TEST_KEY_ABSENT", 3),
    )
    .unwrap_err();
    assert_eq!(err, SynthError::AuthMissing("REMOTE_TEST_KEY_ABSENT".into()));
}

#[test]
fn slow_endpoint_times_out() {
    std::env::set_var("REMOTE_TEST_KEY_SLOW", "k");
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/", listener.local_addr().unwrap());
    let hold = std::thread::spawn(move || {
        let conn = listener.accept();
        std::thread::sleep(Duration::from_millis(1_500));
        drop(conn);
    });
    let mut cfg = config(&url, "REMOTE_TEST_KEY_SLOW", 1);
    cfg.request_timeout_ms = 200;
    let err = synthesize_remote(&prompt(), &cfg).unwrap_err();
    hold.join().unwrap();
    assert_eq!(err, SynthError::Timeout);
}

#[test]
fn remote_synthesizer_drives_the_repair_loop() {
    std::env::set_var("REMOTE_TEST_KEY_LOOP", "k");
    // The stub answers with a policy that allows the must-allow request only.
    let stub = Stub::start(vec![(200, completion(POLICY))]);
    let cfg = RepairConfig {
        max_iterations: 1,
        mode: PromptMode::FaultLocalization,
        synthesizer: config(&stub.url, "REMOTE_TEST_KEY_LOOP", 1),
        target_accuracy_percent: 100.0,
    };
    let start = Policy::new(vec![]);
    let spec = RequestSpec::new(
        vec![AccessRequest::new("s3:GetObject", "arn:aws:s3:::b/k", Effect::Allow)],
        vec![AccessRequest::new("s3:PutObject", "arn:aws:s3:::b/k", Effect::Deny)],
    );
    let synth = RemoteSynthesizer {
        config: cfg.synthesizer.clone(),
    };
    let outcome = repair::repair_with(&start, &spec, &cfg, &synth as &dyn Synthesizer).unwrap();
    let seen = stub.requests();
    stub.join();
    assert_eq!(outcome.status, RepairStatus::CompleteRepair);
    assert_eq!(outcome.iterations_used, 1);
    let user = seen[0].body["messages"][1]["content"].as_str().unwrap();
    assert!(user.contains("SHOULD BE ALLOWED BUT IMPLICITLY DENIED"));
}
