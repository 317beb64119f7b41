use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use srlm_core::analytics::{fit_log_curve, load_curve, load_tasks, pass_at_n, skill_report, write_curve};
use srlm_core::backend::{Backend, BackendHandle, GenerationParams, GenerationRequest, LiveBackend, MockBackend};
use srlm_core::catalyst::{acquire_catalyst, CatalystConfig};
use srlm_core::expansion::{candidates_to_jsonl, expand_dataset, load_candidates, ExpansionConfig};
use srlm_core::jsonl;
use srlm_core::orchestrator::{verify_workspace, Pipeline, RunConfig};
use srlm_core::selection::{apply_selection, select_all, write_decisions, LengthMetric, SelectorKind, Strategy};
use srlm_core::store::{load_dataset, load_manifest, write_catalyst, write_dataset};

#[derive(Parser)]
#[command(name = "srlm", version, about = "Iterative rationale enrichment pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the reasoning catalyst from a source dataset.
    Catalyst(CatalystArgs),
    /// Sample enriched rationale candidates for an iteration's dataset.
    Expand(ExpandArgs),
    /// Choose between incumbents and candidates and write the next dataset.
    Select(SelectArgs),
    /// Run the full train, expand, select loop.
    Iterate(IterateArgs),
    /// Check a workspace's manifest chain and file digests.
    Verify(VerifyArgs),
    /// Analysis reports.
    Report {
        #[command(subcommand)]
        report: ReportCommand,
    },
    /// Evaluation harnesses.
    Eval {
        #[command(subcommand)]
        eval: EvalCommand,
    },
    /// Fit y = a * ln(x) + b to a pass@N curve.
    Fit(FitArgs),
}

#[derive(Subcommand)]
enum ReportCommand {
    /// Meta-reasoning skill distribution of a dataset, candidates or catalyst file.
    Skills(SkillsArgs),
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Best-of-N accuracy over an exact-match task file.
    PassAtN(PassAtNArgs),
}

#[derive(Args, Clone)]
struct BackendArgs {
    /// Use a recorded mock fixture instead of a live endpoint.
    #[arg(long, value_name = "FIXTURE")]
    mock: Option<PathBuf>,
    /// Live endpoint base URL.
    #[arg(long, env = "SRLM_BACKEND_URL")]
    backend_url: Option<String>,
    /// Environment variable holding the bearer token.
    #[arg(long, default_value = "SRLM_BACKEND_TOKEN")]
    token_env: String,
    /// Request timeout in seconds.
    #[arg(long, default_value_t = 600)]
    timeout_secs: u64,
}

impl BackendArgs {
    fn open(&self) -> Result<Arc<dyn Backend>> {
        if let Some(fixture) = &self.mock {
            let mock = MockBackend::from_fixture_file(fixture)
                .with_context(|| format!("loading fixture {}", fixture.display()))?;
            return Ok(Arc::new(mock));
        }
        let Some(url) = &self.backend_url else {
            bail!("no backend: pass --mock <fixture> or --backend-url (or set SRLM_BACKEND_URL)");
        };
        let token = std::env::var(&self.token_env).ok();
        Ok(Arc::new(LiveBackend::new(
            url,
            token,
            std::time::Duration::from_secs(self.timeout_secs),
        )?))
    }
}

#[derive(Args, Clone, Copy)]
struct SamplingArgs {
    #[arg(long, default_value_t = 0.2)]
    temperature: f64,
    #[arg(long, default_value_t = 0.9)]
    top_p: f64,
    #[arg(long, default_value_t = 8192)]
    max_tokens: u32,
    #[arg(long, default_value_t = 8)]
    concurrency_limit: usize,
}

impl SamplingArgs {
    fn params(&self) -> GenerationParams {
        GenerationParams {
            temperature: self.temperature,
            top_p: self.top_p,
            max_tokens: self.max_tokens,
        }
    }
}

#[derive(Args)]
struct CatalystArgs {
    /// Source dataset JSONL.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Model that writes the enriched rationales.
    #[arg(long)]
    model: String,
    #[arg(long, default_value_t = 2)]
    max_regenerations: u32,
    #[command(flatten)]
    backend: BackendArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
}

#[derive(Args)]
struct ExpandArgs {
    /// Manifest of the iteration to expand; its dataset.jsonl sits beside it.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Run config supplying backend and sampling settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 5)]
    n_samples: u32,
    /// Generating model; defaults to the manifest's trained (else base) model.
    #[arg(long)]
    model: Option<String>,
    #[command(flatten)]
    backend: BackendArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long, value_parser = parse_selector)]
    strategy: SelectorKind,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    candidates: PathBuf,
    /// Next-iteration dataset.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    decisions: Option<PathBuf>,
    #[arg(long, default_value = "chars", value_parser = parse_metric)]
    length_metric: LengthMetric,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long, default_value_t = 8)]
    concurrency_limit: usize,
}

#[derive(Args)]
struct IterateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Continue an initialized workspace.
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    workspace: PathBuf,
}

#[derive(Args)]
struct SkillsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PassAtNArgs {
    #[arg(long)]
    tasks: PathBuf,
    /// Comma-separated sample counts, e.g. 1,2,4,8.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u32>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    model: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "")]
    system_prompt: String,
    #[command(flatten)]
    backend: BackendArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    curve: PathBuf,
}

fn parse_selector(s: &str) -> Result<SelectorKind, String> {
    s.parse()
}

fn parse_metric(s: &str) -> Result<LengthMetric, String> {
    s.parse()
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Catalyst(a) => catalyst(a),
        Command::Expand(a) => expand(a),
        Command::Select(a) => select(a),
        Command::Iterate(a) => iterate(a),
        Command::Verify(a) => verify(a),
        Command::Report {
            report: ReportCommand::Skills(a),
        } => report_skills(a),
        Command::Eval {
            eval: EvalCommand::PassAtN(a),
        } => eval_pass_at_n(a),
        Command::Fit(a) => fit(a),
    }
}

fn catalyst(a: CatalystArgs) -> Result<()> {
    let source = load_dataset(&a.input)?;
    let handle =
        BackendHandle::new(a.backend.open()?, a.model).with_concurrency_limit(a.sampling.concurrency_limit);
    let config = CatalystConfig {
        sample_count: a.count,
        selection_seed: a.seed,
        max_regeneration_attempts: a.max_regenerations,
        params: a.sampling.params(),
    };
    let (set, report) = acquire_catalyst(&source, &config, &handle)?;
    let digest = write_catalyst(&set, &a.out)?;
    println!(
        "wrote {} catalyst examples to {} ({digest}); {} regenerations, {} replacements",
        set.len(),
        a.out.display(),
        report.regenerations,
        report.replacements
    );
    Ok(())
}

fn dataset_beside(manifest: &Path) -> PathBuf {
    manifest.with_file_name("dataset.jsonl")
}

fn expand(a: ExpandArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let dataset = load_dataset(&dataset_beside(&a.manifest))?;
    anyhow::ensure!(
        dataset.digest() == manifest.dataset_digest,
        "dataset beside {} does not match its manifest digest",
        a.manifest.display()
    );
    let (backend, mut expansion) = match &a.config {
        Some(path) => {
            let config = RunConfig::load(path)?;
            (config.open_backend()?, config.expansion)
        }
        None => (
            a.backend.open()?,
            ExpansionConfig {
                n_samples: a.n_samples,
                params: a.sampling.params(),
                concurrency_limit: a.sampling.concurrency_limit,
                seed: 0,
            },
        ),
    };
    if let Some(seed) = a.seed {
        expansion.seed = seed;
    }
    let model = a.model.unwrap_or_else(|| {
        if manifest.trained_model_ref.is_empty() {
            manifest.base_model_ref.clone()
        } else {
            manifest.trained_model_ref.clone()
        }
    });
    let handle = BackendHandle::new(backend, &model).with_concurrency_limit(expansion.concurrency_limit);
    let candidates = expand_dataset(&dataset, &handle, &expansion)?;
    jsonl::write_atomic(&a.out, &candidates_to_jsonl(&candidates))
        .with_context(|| format!("writing {}", a.out.display()))?;
    let valid = candidates.iter().filter(|c| c.is_valid()).count();
    println!("wrote {} candidates ({valid} valid) under {model}", candidates.len());
    Ok(())
}

fn select(a: SelectArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let dataset = load_dataset(&dataset_beside(&a.manifest))?;
    let candidates = load_candidates(&a.candidates)?;
    let strategy = match a.strategy {
        SelectorKind::Length => Strategy::Length(a.length_metric),
        kind => {
            let model = match kind {
                SelectorKind::OnPolicy if manifest.trained_model_ref.is_empty() => {
                    bail!("on-policy selection needs a trained model reference in the manifest")
                }
                SelectorKind::OnPolicy => manifest.trained_model_ref.clone(),
                _ => manifest.base_model_ref.clone(),
            };
            Strategy::Score {
                kind,
                scorer: BackendHandle::new(a.backend.open()?, model).with_concurrency_limit(a.concurrency_limit),
            }
        }
    };
    let decisions = select_all(&dataset, &candidates, &strategy)?;
    if let Some(path) = &a.decisions {
        write_decisions(&decisions, path).with_context(|| format!("writing {}", path.display()))?;
    }
    let next = apply_selection(&dataset, &decisions, &candidates)?;
    let digest = write_dataset(&next, &a.out)?;
    let won = decisions.iter().filter(|d| d.winner != srlm_core::Winner::Incumbent).count();
    println!(
        "{won}/{} samples took a candidate; wrote iteration {} to {} ({digest})",
        decisions.len(),
        next.iteration(),
        a.out.display()
    );
    Ok(())
}

fn iterate(a: IterateArgs) -> Result<()> {
    let config = RunConfig::load(&a.config)?;
    let backend = config.open_backend()?;
    let manifests = Pipeline::new(config, backend)?.run(a.resume)?;
    let last = manifests.last().expect("run returns at least one manifest");
    println!(
        "completed {} iterations; final dataset {}",
        manifests.len() - 1,
        last.dataset_digest
    );
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<()> {
    let report = verify_workspace(&a.workspace)?;
    println!(
        "ok: {} manifests verified; final dataset {}",
        report.manifests, report.last_dataset_digest
    );
    Ok(())
}

fn report_skills(a: SkillsArgs) -> Result<()> {
    let report = skill_report(&a.input)?;
    let mut json = serde_json::to_vec_pretty(&report.to_json())?;
    json.push(b'\n');
    jsonl::write_atomic(&a.out, &json).with_context(|| format!("writing {}", a.out.display()))?;
    print!("{}", report.to_table());
    Ok(())
}

fn eval_pass_at_n(a: PassAtNArgs) -> Result<()> {
    let tasks = load_tasks(&a.tasks)?;
    let handle =
        BackendHandle::new(a.backend.open()?, a.model).with_concurrency_limit(a.sampling.concurrency_limit);
    let mut template = GenerationRequest::new(a.system_prompt, "", a.sampling.params());
    if let Some(seed) = a.seed {
        template = template.with_seed(seed);
    }
    let curve = pass_at_n(&tasks, &handle, &a.n, &template)?;
    write_curve(&curve, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    print!("{curve}");
    Ok(())
}

fn fit(a: FitArgs) -> Result<()> {
    let curve = load_curve(&a.curve)?;
    let f = fit_log_curve(&curve)?;
    println!("y = {:.4} * ln(x) + {:.4}", f.a, f.b);
    Ok(())
}
