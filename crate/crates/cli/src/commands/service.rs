use std::fs::File;
use std::io::BufWriter;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use clap::Args;
use hairstyle_service::{export as export_store, serve as run_service, ServiceConfig};

use crate::error::{Failure, Outcome};
use crate::io;

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    /// Directory of images to annotate
    #[arg(long)]
    pub images: PathBuf,
    /// Append-only annotation store (created if absent)
    #[arg(long)]
    pub store: PathBuf,
    /// Built annotation UI, served at /
    #[arg(long)]
    pub ui: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Task lease length in seconds
    #[arg(long, default_value_t = 600)]
    pub lease_secs: u64,
}

pub fn serve(args: &ServeArgs) -> Outcome {
    let (tax, _) = io::load_taxonomy(args.taxonomy.as_deref())?;
    let cfg = ServiceConfig {
        image_dir: args.images.clone(),
        store_path: args.store.clone(),
        ui_dir: args.ui.clone(),
        lease: Duration::from_secs(args.lease_secs),
    };
    let _ = tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .try_init();
    let runtime = tokio::runtime::Runtime::new().map_err(Failure::io)?;
    let addr = SocketAddr::new(args.host, args.port);
    runtime.block_on(run_service(cfg, tax, addr)).map_err(Failure::io)
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    /// Annotation store written by `serve`
    #[arg(long)]
    pub store: PathBuf,
    /// Annotations, one per line, style_id = image id
    #[arg(long)]
    pub out: PathBuf,
}

pub fn export(args: &ExportArgs) -> Outcome {
    let (tax, _) = io::load_taxonomy(args.taxonomy.as_deref())?;
    let file = File::create(&args.out).map_err(|e| Failure::file(&args.out, e))?;
    let summary = export_store(&args.store, &tax, BufWriter::new(file)).map_err(Failure::io)?;
    for w in &summary.warnings {
        eprintln!("warning: {}: skipped {w}", args.store.display());
    }
    eprintln!("{} annotations exported to {}", summary.written, args.out.display());
    Ok(())
}
