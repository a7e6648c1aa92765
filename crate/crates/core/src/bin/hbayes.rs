//! Command-line driver: `generate`, `train`, `rank` and `eval`.
//!
//! Exit status is 0 on success, 2 for usage errors (bad flags, missing input
//! files) and 1 for failures while running a command.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use hbayes::evaluation::{cross_validate_with, HBayesScorer, PopularityScorer, DEFAULT_KS};
use hbayes::generator::{sample_dataset, GeneratorConfig, TruePrecisions};
use hbayes::inference::{fit_with, FitOptions};
use hbayes::io::{
    default_brand_name, default_user_name, load_checkpoint, load_event_file, save_checkpoint,
    save_ground_truth, save_metrics_report, write_events, write_rankings, write_trace, Checkpoint,
    IdMap, RankedItem, TruthFile,
};
use hbayes::predictor::{rank_top_k, Candidate};
use hbayes::{HBayesError, HyperParams, Result};

#[derive(Parser)]
#[command(name = "hbayes", version, about = "Hierarchical Bayesian click model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic event file and its ground truth.
    Generate(GenerateArgs),
    /// Fit the model to an event file and write a checkpoint.
    Train(TrainArgs),
    /// Rank the items of an event file for one user.
    Rank(RankArgs),
    /// Cross-validate ranking quality on an event file.
    Eval(EvalArgs),
}

#[derive(clap::Args)]
struct GenerateArgs {
    #[arg(long)]
    users: usize,
    #[arg(long)]
    brands: usize,
    #[arg(long)]
    styles: usize,
    #[arg(long)]
    events: usize,
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    truth_out: Option<PathBuf>,
    /// Dirichlet concentration of the style proportions (default 1/styles).
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    delta_u: f64,
    #[arg(long, default_value_t = 4.0)]
    delta_b: f64,
    #[arg(long, default_value_t = 1.0)]
    delta_s: f64,
    #[arg(long, default_value_t = 1.0)]
    delta_w: f64,
    /// Standard deviation of each feature coordinate.
    #[arg(long, default_value_t = 1.0)]
    feature_scale: f64,
}

#[derive(clap::Args)]
struct TrainArgs {
    #[arg(long, value_parser = existing_file)]
    events: PathBuf,
    #[arg(long)]
    styles: usize,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    checkpoint_out: PathBuf,
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Run per-entity updates on all cores.
    #[arg(long)]
    parallel: bool,
}

#[derive(clap::Args)]
struct RankArgs {
    #[arg(long, value_parser = existing_file)]
    checkpoint: PathBuf,
    /// Candidate items: every line of this event file.
    #[arg(long, value_parser = existing_file)]
    events: PathBuf,
    /// User id as written in the training events.
    #[arg(long)]
    user: String,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Output file; rankings go to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScorerKind {
    Hbayes,
    Popularity,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long, value_parser = existing_file)]
    events: PathBuf,
    #[arg(long)]
    styles: usize,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(2..))]
    folds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_KS.to_vec())]
    k: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = ScorerKind::Hbayes)]
    scorer: ScorerKind,
    #[arg(long)]
    report_out: Option<PathBuf>,
}

fn existing_file(s: &str) -> std::result::Result<PathBuf, String> {
    let p = PathBuf::from(s);
    if p.is_file() {
        Ok(p)
    } else {
        Err(format!("no such file: {s}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train(a),
        Command::Rank(a) => rank(a),
        Command::Eval(a) => eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let mut hp = HyperParams::new(a.styles, a.dim);
    if let Some(g) = a.gamma0 {
        hp.gamma0 = vec![g; a.styles];
    }
    let mut config = GeneratorConfig::new(a.users, a.brands, a.events);
    config.precisions = TruePrecisions {
        user: a.delta_u,
        brand: a.delta_b,
        style: a.delta_s,
        w: a.delta_w,
    };
    config.feature_scale = a.feature_scale;
    let (data, truth) = sample_dataset(&hp, &config, a.seed)?;
    let users = IdMap::from_names((0..data.num_users).map(default_user_name).collect())?;
    let brands = IdMap::from_names((0..data.num_brands).map(default_brand_name).collect())?;
    write_events(&a.out, &data, &users, &brands)?;
    if let Some(path) = &a.truth_out {
        save_ground_truth(
            path,
            &TruthFile {
                truth,
                user_ids: users.names().to_vec(),
                brand_ids: brands.names().to_vec(),
            },
        )?;
    }
    println!(
        "wrote {} events ({} users, {} brands, d={}) to {}",
        data.len(),
        data.num_users,
        data.num_brands,
        data.feature_dim,
        a.out.display()
    );
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let file = load_event_file(&a.events)?;
    let mut hp = HyperParams::new(a.styles, file.dataset.feature_dim);
    hp.max_iters = a.max_iters;
    hp.rel_tol = a.tol;
    let options = FitOptions {
        parallel: a.parallel,
        ..FitOptions::default()
    };
    let (state, report) = fit_with(&file.dataset, &hp, a.seed, options)?;
    if let Some(path) = &a.trace_out {
        write_trace(path, &report.elbo_trace)?;
    }
    let final_elbo = report.elbo_trace.last().copied().unwrap_or(f64::NAN);
    let (iterations, converged) = (report.iterations_run, report.converged);
    save_checkpoint(
        &a.checkpoint_out,
        &Checkpoint {
            hyperparams: hp,
            state,
            user_ids: file.users.names().to_vec(),
            brand_ids: file.brands.names().to_vec(),
            fit_report: report,
        },
    )?;
    println!(
        "{} after {iterations} sweeps, ELBO {final_elbo:.6}; checkpoint {}",
        if converged { "converged" } else { "stopped" },
        a.checkpoint_out.display()
    );
    Ok(())
}

fn rank(a: RankArgs) -> Result<()> {
    let cp = load_checkpoint(&a.checkpoint)?;
    let file = load_event_file(&a.events)?;
    let dim = cp.state.feature_dim();
    if file.dataset.feature_dim != dim {
        return Err(HBayesError::DimensionMismatch {
            expected: dim,
            found: file.dataset.feature_dim,
        });
    }
    let known_brands = IdMap::from_names(cp.brand_ids.clone())?;
    let known_users = IdMap::from_names(cp.user_ids.clone())?;
    // Unknown ids map past the fitted range and are scored with the priors.
    let user = known_users.get(&a.user).unwrap_or(cp.state.num_users());
    let brand_index = |name: &str| known_brands.get(name).unwrap_or(cp.state.num_brands());

    let candidates: Vec<Candidate> = file
        .dataset
        .events
        .iter()
        .enumerate()
        .map(|(t, e)| Candidate {
            item_id: t,
            x: DVector::clone(&e.x),
            brand: brand_index(file.brands.name(e.brand).expect("interned brand")),
        })
        .collect();
    let top = rank_top_k(user, &candidates, &cp.state, a.k as usize)?;
    let ranked: Vec<RankedItem> = top
        .into_iter()
        .enumerate()
        .map(|(r, (t, prob))| RankedItem {
            rank: r + 1,
            index: t,
            item: file.items[t].clone(),
            brand: file
                .brands
                .name(file.dataset.events[t].brand)
                .expect("interned brand")
                .to_string(),
            prob,
        })
        .collect();
    match &a.out {
        Some(path) => write_rankings(path, &ranked)?,
        None => {
            for r in &ranked {
                println!("{}", serde_json::to_string(r)?);
            }
        }
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let file = load_event_file(&a.events)?;
    let data = &file.dataset;
    let folds = a.folds as usize;
    let report = match a.scorer {
        ScorerKind::Hbayes => {
            let mut hp = HyperParams::new(a.styles, data.feature_dim);
            hp.max_iters = a.max_iters;
            hp.rel_tol = a.tol;
            let mut scorer = HBayesScorer {
                hp,
                seed: a.seed,
                options: FitOptions::default(),
            };
            cross_validate_with(data, folds, a.seed, &a.k, &mut scorer)?
        }
        ScorerKind::Popularity => {
            cross_validate_with(data, folds, a.seed, &a.k, &mut PopularityScorer)?
        }
    };
    if let Some(path) = &a.report_out {
        save_metrics_report(path, &report)?;
    }
    println!(
        "{:>4}  {:>9}  {:>9}  {:>9}  users",
        "K", "precision", "recall", "ndcg"
    );
    for m in &report.mean {
        println!(
            "{:>4}  {:>9.4}  {:>9.4}  {:>9.4}  {}",
            m.k, m.precision, m.recall, m.ndcg, m.num_users_evaluated
        );
    }
    Ok(())
}
