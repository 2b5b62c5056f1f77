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

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use policy_repair::batch::{build_report, read_outcomes, run_batch, write_report, BatchConfig};
use policy_repair::{
    corpus_stats, localize, normalize_policy, repair, validate_goal, Backend, GenConfig, Policy, PromptMode,
    RepairConfig, RequestSpec, SynthesizerConfig,
};

#[derive(Parser)]
#[command(
    name = "policy-repair",
    version,
    about = "Validate, localize and repair access control policies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a policy against a request specification.
    Validate(PolicyAndSpec),
    /// Map each misclassified request to responsible statements.
    Localize(PolicyAndSpec),
    /// Generate a request specification with injected misclassifications.
    GenRequests {
        #[arg(long)]
        policy: PathBuf,
        #[arg(short = 'n', long, default_value_t = 20)]
        size: usize,
        #[arg(long, default_value_t = 0.2)]
        rho: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the iterative repair loop on one policy.
    Repair {
        #[command(flatten)]
        input: PolicyAndSpec,
        #[arg(long, value_enum, default_value_t = ModeArg::Fl)]
        mode: ModeArg,
        #[command(flatten)]
        synth: SynthArgs,
        /// Write the outcome JSON here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the experiment matrix over a corpus directory.
    Batch {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "10,20,30,50")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0.2)]
        rho: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "mode", value_enum, value_delimiter = ',', default_value = "base,fl")]
        modes: Vec<ModeArg>,
        #[command(flatten)]
        synth: SynthArgs,
        #[arg(long, default_value = "out")]
        output_dir: PathBuf,
        /// Load suites named <stem>.n<size>.json from here when present.
        #[arg(long)]
        requests_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        workers: usize,
        /// Global wall-clock budget in seconds (off by default).
        #[arg(long)]
        time_budget_secs: Option<u64>,
    },
    /// Summarize a corpus directory.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Rebuild report tables from an outcomes file.
    Report {
        #[arg(long)]
        outcomes: PathBuf,
        /// Also write report.json and report.txt here.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct PolicyAndSpec {
    #[arg(long)]
    policy: PathBuf,
    #[arg(long)]
    requests: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value_t = BackendArg::RuleBased)]
    backend: BackendArg,
    /// JSON synthesizer config; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = "POLICY_REPAIR_ENDPOINT")]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long, default_value_t = 5)]
    max_iterations: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Base,
    Fl,
}

impl From<ModeArg> for PromptMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Base => PromptMode::Base,
            ModeArg::Fl => PromptMode::FaultLocalization,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Remote,
    RuleBased,
}

impl SynthArgs {
    fn repair_config(&self, mode: PromptMode) -> Result<RepairConfig> {
        let mut synth: SynthesizerConfig = match &self.config {
            Some(path) => serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?,
            None => SynthesizerConfig::default(),
        };
        if self.config.is_none() || matches!(self.backend, BackendArg::Remote) {
            synth.backend = match self.backend {
                BackendArg::Remote => Backend::Remote,
                BackendArg::RuleBased => Backend::RuleBased,
            };
        }
        if let Some(e) = &self.endpoint {
            synth.endpoint = Some(e.clone());
        }
        if let Some(m) = &self.model {
            synth.model_name = Some(m.clone());
        }
        Ok(RepairConfig {
            max_iterations: self.max_iterations,
            mode,
            synthesizer: synth,
            ..RepairConfig::default()
        })
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_policy(path: &Path) -> Result<Policy> {
    normalize_policy(&read(path)?).with_context(|| format!("parsing policy {}", path.display()))
}

fn load_spec(path: &Path) -> Result<RequestSpec> {
    RequestSpec::from_json_str(&read(path)?).with_context(|| format!("parsing requests {}", path.display()))
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn pretty(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("json value serializes")
}

fn main() -> Result<()> {
    env_logger::init();
    match Cli::parse().command {
        Command::Validate(io) => {
            let policy = load_policy(&io.policy)?;
            let result = validate_goal(&policy, &load_spec(&io.requests)?)?;
            let misclassified: Vec<_> = result
                .misclassified()
                .map(|(req, d)| serde_json::json!({"request": req.to_json(), "expected": req.expected.as_str(), "got": format!("{:?}", d.verdict)}))
                .collect();
            let out = serde_json::json!({
                "status": if result.passed() { "pass" } else { "fail" },
                "correct": result.correct_count,
                "total": result.total_count,
                "accuracy_percent": result.accuracy_percent,
                "misclassified": misclassified,
            });
            println!("{}", pretty(&out));
        }
        Command::Localize(io) => {
            let policy = load_policy(&io.policy)?;
            let result = validate_goal(&policy, &load_spec(&io.requests)?)?;
            let report = localize(&policy, &result)?;
            println!("{}", pretty(&report.to_json(&policy)));
        }
        Command::GenRequests {
            policy,
            size,
            rho,
            seed,
            output,
        } => {
            let policy = load_policy(&policy)?;
            let spec = policy_repair::generate_requests(&policy, &GenConfig::new(size, rho, seed))?;
            emit(&spec.to_json_string(), output.as_deref())?;
        }
        Command::Repair {
            input,
            mode,
            synth,
            output,
        } => {
            let policy = load_policy(&input.policy)?;
            let spec = load_spec(&input.requests)?;
            let outcome = repair(&policy, &spec, &synth.repair_config(mode.into())?)?;
            emit(&pretty(&outcome.to_json()), output.as_deref())?;
        }
        Command::Batch {
            corpus,
            sizes,
            rho,
            seed,
            modes,
            synth,
            output_dir,
            requests_dir,
            workers,
            time_budget_secs,
        } => {
            if sizes.is_empty() || modes.is_empty() {
                bail!("at least one size and one mode are required");
            }
            let mut cfg = BatchConfig::new(&output_dir);
            cfg.sizes = sizes;
            cfg.rho = rho;
            cfg.seed = seed;
            cfg.modes = modes.into_iter().map(PromptMode::from).collect();
            cfg.repair = synth.repair_config(PromptMode::FaultLocalization)?;
            cfg.requests_dir = requests_dir;
            cfg.workers = workers;
            cfg.time_budget = time_budget_secs.map(Duration::from_secs);
            fs::create_dir_all(&output_dir)?;
            let report = run_batch(&corpus, &cfg)?;
            print!("{}", report.render_tables());
        }
        Command::Stats { corpus, json } => {
            let (policies, skipped) = policy_repair::batch::load_corpus(&corpus)?;
            for s in &skipped {
                eprintln!("skipped {}: {}", s.file, s.reason);
            }
            let policies: Vec<Policy> = policies.into_iter().map(|(_, p)| p).collect();
            let stats = corpus_stats(&policies)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&stats)?);
            } else {
                print!("{stats}");
            }
        }
        Command::Report { outcomes, output_dir } => {
            let records = read_outcomes(&read(&outcomes)?)?;
            let report = build_report(records, vec![], vec![]);
            if let Some(dir) = output_dir {
                fs::create_dir_all(&dir)?;
                write_report(&report, &dir)?;
            }
            print!("{}", report.render_tables());
        }
    }
    Ok(())
}
