use std::path::PathBuf;

use clap::Args;
use hairstyle_core::balancer::{fit_weights, sample as draw, BalanceConfig, SamplingWeights, TargetMarginals};
use serde_json::{json, Value};

use crate::error::{Failure, Outcome};
use crate::io::{self, display};

#[derive(Debug, Args)]
pub struct BalanceArgs {
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    #[arg(long)]
    pub library: PathBuf,
    /// Target marginals (the canonical targets when absent)
    #[arg(long)]
    pub targets: Option<PathBuf>,
    /// JSON file with max_iters, tol and damping; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub damping: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn balance(args: &BalanceArgs) -> Outcome {
    let (tax, source) = io::load_taxonomy(args.taxonomy.as_deref())?;
    let library = io::read_library(&args.library, &tax)?;
    let targets = match &args.targets {
        Some(p) => io::read_json(p)?,
        None => TargetMarginals::canonical(),
    };
    let mut cfg: BalanceConfig = match &args.config {
        Some(p) => io::read_json(p)?,
        None => BalanceConfig::default(),
    };
    if let Some(t) = args.tol {
        cfg.tol = t;
    }
    if let Some(m) = args.max_iters {
        cfg.max_iters = m;
    }
    if let Some(d) = args.damping {
        cfg.damping = d;
    }
    if !(cfg.tol >= 0.0 && cfg.damping > 0.0 && cfg.damping <= 1.0) {
        return Err(Failure::rejected("need tol >= 0 and damping in (0, 1]"));
    }

    let weights = fit_weights(&tax, &library, &targets, &cfg).map_err(Failure::rejected)?;
    for (attr, r) in &weights.residuals {
        eprintln!("{attr}: L1 residual {r:.3e}");
    }
    if weights.converged {
        eprintln!("converged after {} iterations", weights.iterations_used);
    } else {
        eprintln!(
            "warning: not converged to tol {} within {} iterations",
            cfg.tol, weights.iterations_used
        );
    }

    let config = json!({
        "library": display(&args.library),
        "targets": targets,
        "balance": cfg,
    });
    let doc = weights.to_json(io::meta("balance", &tax, &source, config));
    io::write_json(&args.out, &doc)
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Weights written by `balance`
    #[arg(long)]
    pub weights: PathBuf,
    /// Number of draws
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn sample(args: &SampleArgs) -> Outcome {
    let doc: Value = io::read_json(&args.weights)?;
    let weights = SamplingWeights::from_json(&doc).map_err(|e| Failure::file(&args.weights, e))?;
    let ids = draw(&weights, args.n, args.seed);
    let out = json!({
        "style_ids": ids,
        "_meta": {
            "command": "sample",
            "tool_version": env!("CARGO_PKG_VERSION"),
            "config": { "weights": display(&args.weights), "n": args.n, "seed": args.seed },
            "sampler": "chacha8-weighted-index",
        },
    });
    io::write_json(&args.out, &out)?;
    eprintln!("{} draws written to {}", args.n, args.out.display());
    Ok(())
}
