use std::net::IpAddr;
use std::path::PathBuf;

use clap::Parser;
use gate_service::{router, AppState};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(
    name = "gate-service",
    version,
    about = "Local HTTP API for the GATE sandbox"
)]
struct Args {
    #[arg(long, default_value = "127.0.0.1")]
    bind: IpAddr,
    #[arg(long, default_value_t = 8731)]
    port: u16,
    /// Session directory holding saved scenarios.
    #[arg(long, default_value = "gate-data")]
    data_dir: PathBuf,
    /// Concurrent solves; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let filter =
        EnvFilter::try_from_env("GATE_LOG_LEVEL").unwrap_or_else(|_| EnvFilter::new("info"));
    tracing_subscriber::fmt().with_env_filter(filter).init();

    let args = Args::parse();
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let state = AppState::open(&args.data_dir, workers)?;
    let listener = tokio::net::TcpListener::bind((args.bind, args.port)).await?;
    tracing::info!(addr = %listener.local_addr()?, workers, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
