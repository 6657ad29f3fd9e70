use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use hairstyle_core::datastore::{join, DemographicSchema, SampleRecord, StyleLibrary};
use hairstyle_core::evaluation::{collate_predictions, report as build_report, Collator, FairnessReport, PredictionRecord};
use hairstyle_core::model::{predict_batch, train as fit, AttrHeadInput, Checkpoint, HeadConfig, TrainConfig, TrainingSet, DEFAULT_DROPOUT};
use hairstyle_core::par::Execution;
use hairstyle_core::taxonomy::{LabelVector, Taxonomy};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::error::{Failure, Outcome};
use crate::io::{self, display};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum HeadInput {
    Hidden,
    Feature,
}

impl From<HeadInput> for AttrHeadInput {
    fn from(h: HeadInput) -> Self {
        match h {
            HeadInput::Hidden => AttrHeadInput::Hidden,
            HeadInput::Feature => AttrHeadInput::Feature,
        }
    }
}

pub const DEFAULT_HIDDEN_DIM: usize = 4096;

/// Training config file: optimizer and schedule fields plus head shape.
#[derive(Debug, Default, Deserialize)]
struct TrainFile {
    #[serde(flatten)]
    train: TrainConfig,
    hidden_dim: Option<usize>,
    dropout_rate: Option<f64>,
    attr_head_input: Option<AttrHeadInput>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    /// Feature store (ids in the `.ids.jsonl` sidecar)
    #[arg(long)]
    pub features: PathBuf,
    /// Samples: {sample_id, style_id}
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long)]
    pub library: PathBuf,
    /// JSON training config; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr_max: Option<f64>,
    #[arg(long)]
    pub lr_min: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long, value_enum)]
    pub attr_head_input: Option<HeadInput>,
    /// Run batch computations on one thread
    #[arg(long)]
    pub sequential: bool,
    /// Checkpoint to write
    #[arg(long)]
    pub out: PathBuf,
}

pub fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

pub fn train(args: &TrainArgs) -> Outcome {
    let (tax, source) = io::load_taxonomy(args.taxonomy.as_deref())?;
    let library = io::read_library(&args.library, &tax)?;
    let features = io::read_features(&args.features)?;
    let samples = io::read_samples(&args.samples)?;
    let file: TrainFile = match &args.config {
        Some(p) => io::read_json(p)?,
        None => TrainFile::default(),
    };
    let mut tcfg = file.train;
    let set_opt = |dst: &mut usize, src: Option<usize>| {
        if let Some(v) = src {
            *dst = v
        }
    };
    set_opt(&mut tcfg.epochs, args.epochs);
    set_opt(&mut tcfg.batch_size, args.batch_size);
    tcfg.lr_max = args.lr_max.unwrap_or(tcfg.lr_max);
    tcfg.lr_min = args.lr_min.unwrap_or(tcfg.lr_min);
    tcfg.weight_decay = args.weight_decay.unwrap_or(tcfg.weight_decay);
    tcfg.seed = args.seed.unwrap_or(tcfg.seed);

    let dim = features.dim();
    let ds = join(features, samples, library, None).map_err(Failure::rejected)?;
    let set = TrainingSet::from_dataset(&ds, &tax).map_err(Failure::rejected)?;
    let hidden = args.hidden_dim.or(file.hidden_dim).unwrap_or(DEFAULT_HIDDEN_DIM);
    let mut head = HeadConfig::for_taxonomy(&tax, dim, hidden, ds.styles.len());
    head.dropout_rate = args.dropout.or(file.dropout_rate).unwrap_or(DEFAULT_DROPOUT);
    head.attr_head_input = args
        .attr_head_input
        .map(AttrHeadInput::from)
        .or(file.attr_head_input)
        .unwrap_or_default();
    head.validate().map_err(Failure::rejected)?;

    eprintln!(
        "training on {} samples, {} styles, {dim}-d features, {} epochs",
        set.len(),
        head.num_styles,
        tcfg.epochs
    );
    let out = fit(&set, &head, &tcfg, execution(args.sequential)).map_err(Failure::rejected)?;
    for r in &out.history {
        eprintln!("epoch {:>3}  lr {:.3e}  loss {:.6}", r.epoch, r.lr, r.loss);
    }

    let config = json!({
        "features": display(&args.features),
        "samples": display(&args.samples),
        "library": display(&args.library),
        "train": tcfg,
        "head": { "hidden_dim": head.hidden_dim, "dropout_rate": head.dropout_rate, "attr_head_input": head.attr_head_input },
    });
    let mut meta = io::meta("train", &tax, &source, config);
    meta.insert("total_steps".into(), json!(out.total_steps));
    meta.insert("history".into(), json!(out.history));
    let ckpt = Checkpoint {
        head_cfg: head,
        layout: tax.layout().to_vec(),
        params: out.params,
        style_ids: ds.styles.ids().map(str::to_string).collect(),
        library: ds.styles.annotations(),
        meta,
    };
    ckpt.save(&args.out).map_err(|e| Failure::file(&args.out, e))?;
    eprintln!("checkpoint written to {}", args.out.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct ReportOutputs {
    /// JSON report
    #[arg(long)]
    pub out: PathBuf,
    /// Plain-text tables
    #[arg(long)]
    pub text: Option<PathBuf>,
    /// CSV export
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Demographic categories and groups (the FairFace groups when absent)
    #[arg(long)]
    pub demographics: Option<PathBuf>,
}

fn write_report(
    outputs: &ReportOutputs,
    report: &FairnessReport,
    name: &str,
    meta: Map<String, Value>,
) -> Outcome {
    let doc = serde_json::to_value(report).expect("report serializes");
    io::write_json(&outputs.out, &io::with_meta(doc, meta))?;
    if let Some(p) = &outputs.text {
        io::write_text(p, &report.render_text(name))?;
    }
    if let Some(p) = &outputs.csv {
        io::write_text(p, &report.to_csv())?;
    }
    eprint!("{}", report.render_text(name));
    Ok(())
}

fn schema(outputs: &ReportOutputs) -> Outcome<DemographicSchema> {
    match &outputs.demographics {
        Some(p) => io::read_json(p),
        None => Ok(DemographicSchema::canonical()),
    }
}

fn evaluate(
    tax: &Taxonomy,
    library: &StyleLibrary,
    samples: &[SampleRecord],
    predictions: &[PredictionRecord],
    schema: &DemographicSchema,
) -> Outcome<FairnessReport> {
    let collator = Collator::new(tax).map_err(Failure::rejected)?;
    let evals = collate_predictions(&collator, library, samples, predictions).map_err(Failure::rejected)?;
    build_report(&evals, schema).map_err(Failure::rejected)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into())
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    /// Checkpoint written by `train`
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    /// Samples with style_id and demographics
    #[arg(long)]
    pub samples: PathBuf,
    /// Per-sample predictions, one JSON object per line
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
    #[command(flatten)]
    pub outputs: ReportOutputs,
}

pub fn eval(args: &EvalArgs) -> Outcome {
    let (tax, source) = io::load_taxonomy(args.taxonomy.as_deref())?;
    let ckpt = Checkpoint::load(&args.model).map_err(|e| Failure::file(&args.model, e))?;
    if ckpt.layout != tax.layout() {
        return Err(Failure::rejected("checkpoint label layout differs from the taxonomy"));
    }
    let library = ckpt.library().map_err(|e| Failure::file(&args.model, e))?;
    let features = io::read_features(&args.features)?;
    let samples = io::read_samples(&args.samples)?;
    let schema = schema(&args.outputs)?;
    let ds = join(features, samples, library, Some(&schema)).map_err(Failure::rejected)?;

    let mut rows = Vec::with_capacity(ds.len() * ds.features.dim());
    for i in 0..ds.len() {
        rows.extend_from_slice(ds.feature(i));
    }
    let preds = predict_batch(&ckpt.params, &ckpt.head_cfg, &rows, execution(args.sequential)).map_err(Failure::rejected)?;
    let records: Vec<PredictionRecord> = ds
        .samples
        .iter()
        .zip(&preds)
        .map(|(s, p)| PredictionRecord {
            sample_id: s.sample_id.clone(),
            style_id: ckpt.style_ids[p.style].clone(),
            head_labels: Some(LabelVector::new(p.attributes.clone())),
        })
        .collect();
    if let Some(p) = &args.predictions {
        hairstyle_core::datastore::write_jsonl(p, &records).map_err(|e| Failure::file(p, e))?;
    }
    let report = evaluate(&tax, &ds.styles, &ds.samples, &records, &schema)?;
    let config = json!({
        "model": display(&args.model),
        "features": display(&args.features),
        "samples": display(&args.samples),
        "demographics": schema,
    });
    write_report(&args.outputs, &report, &stem(&args.model), io::meta("eval", &tax, &source, config))
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    #[arg(long)]
    pub library: PathBuf,
    /// Samples with style_id and demographics
    #[arg(long)]
    pub samples: PathBuf,
    /// Predictions: {sample_id, style_id, head_labels?}
    #[arg(long)]
    pub predictions: PathBuf,
    /// Model name in the text table
    #[arg(long, default_value = "model")]
    pub name: String,
    #[command(flatten)]
    pub outputs: ReportOutputs,
}

pub fn report(args: &ReportArgs) -> Outcome {
    let (tax, source) = io::load_taxonomy(args.taxonomy.as_deref())?;
    let library = io::read_library(&args.library, &tax)?;
    let samples = io::read_samples(&args.samples)?;
    let predictions: Vec<PredictionRecord> = io::read_lines(&args.predictions)?;
    let schema = schema(&args.outputs)?;
    let report = evaluate(&tax, &library, &samples, &predictions, &schema)?;
    let config = json!({
        "library": display(&args.library),
        "samples": display(&args.samples),
        "predictions": display(&args.predictions),
        "demographics": schema,
    });
    write_report(&args.outputs, &report, &args.name, io::meta("report", &tax, &source, config))
}
