use std::io::Write;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use kgexplore_core::bundle::load_bundle;
use kgexplore_core::embed::Embedder;
use kgexplore_core::Exec;
use kgexplore_service::api::{cors_layer, router, serve, AppState};
use kgexplore_service::config::{BuildArgs, Cli, Command, ServeArgs};
use kgexplore_service::endpoint::EndpointClient;
use kgexplore_service::pipeline::{make_embedder, make_labeler, run_build, Stage, StageError};
use tracing_subscriber::EnvFilter;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn fail(err: StageError) -> ExitCode {
    let body = serde_json::json!({ "error": err });
    eprintln!("{body}");
    ExitCode::from(if err.stage == Stage::Config { EXIT_CONFIG } else { EXIT_FAILURE })
}

fn build(args: BuildArgs) -> Result<(), StageError> {
    let config = args.resolve().map_err(|e| StageError::new(Stage::Config, e))?;
    let exec = Exec::default();
    let embedder = make_embedder(&config.embedder, exec)?;
    let labeler = make_labeler(&config.labeler)?;
    let report = run_build(&config, embedder.as_ref(), labeler.as_ref(), exec)?;
    println!("{}", serde_json::to_string(&report).expect("report serializes"));
    Ok(())
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = terminate => {}
    }
    tracing::info!("shutting down");
}

fn run_server(args: ServeArgs) -> Result<(), StageError> {
    let config = args.resolve().map_err(|e| StageError::new(Stage::Config, e))?;
    let bundle = load_bundle(&config.index_path).map_err(|e| StageError::new(Stage::Index, e))?;
    let exec = Exec::default();
    // created outside the runtime; blocking clients must not be dropped inside it
    let embedder: Arc<dyn Embedder> = Arc::from(make_embedder(&config.embedder, exec)?);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| StageError::new(Stage::Config, e))?;
    let result = runtime.block_on(async {
        let endpoint = EndpointClient::new(config.endpoint.clone()).map_err(|e| StageError::new(Stage::Config, e))?;
        let state = AppState::new(bundle, endpoint, embedder.clone(), config.type_mode, exec)
            .map_err(|e| StageError::new(Stage::Embed, e))?;
        let app = router(Arc::new(state), cors_layer(&config.cors_origins));
        let listener = tokio::net::TcpListener::bind(config.bind)
            .await
            .map_err(|e| StageError::new(Stage::Config, format!("cannot bind {}: {e}", config.bind)))?;
        let addr = listener.local_addr().map_err(|e| StageError::new(Stage::Config, e))?;
        println!("listening on http://{addr}");
        let _ = std::io::stdout().flush();
        serve(listener, app, shutdown_signal())
            .await
            .map_err(|e| StageError::new(Stage::Config, e))
    });
    drop(runtime);
    drop(embedder);
    result
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("KGEXPLORE_LOG").unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Build(args) => build(args),
        Command::Serve(args) => run_server(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
