use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use socialdao_core::ledger::{self, file::read_records};
use socialdao_core::{Engine, EngineConfig};

use crate::config::{load_rubric, GatewayConfig};
use crate::scenario::{run_scenario, ScenarioScript};

#[derive(Debug, Parser)]
#[command(name = "socialdao", version, about = "Coordination engine for sextortion-relief casework")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Verb,
}

#[derive(Debug, Subcommand)]
pub enum Verb {
    /// Create an empty data directory.
    Init {
        #[arg(long, env = "SOCIALDAO_DATA_DIR")]
        data_dir: PathBuf,
    },
    /// Run the HTTP service until interrupted.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, env = "SOCIALDAO_PORT")]
        port: Option<u16>,
        #[arg(long, env = "SOCIALDAO_DATA_DIR")]
        data_dir: Option<PathBuf>,
        #[arg(long, env = "SOCIALDAO_RUBRIC")]
        rubric: Option<PathBuf>,
    },
    /// Run a scenario script against a fresh engine and print its transcript.
    RunScenario {
        script: PathBuf,
        #[arg(long, env = "SOCIALDAO_RUBRIC")]
        rubric: Option<PathBuf>,
        /// Write the transcript here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the hash chain of a ledger file or data directory.
    Verify {
        #[arg(long, env = "SOCIALDAO_DATA_DIR", conflicts_with = "ledger")]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        ledger: Option<PathBuf>,
    },
    /// Write the full engine state of a data directory to a file.
    Export {
        out: PathBuf,
        #[arg(long, env = "SOCIALDAO_DATA_DIR")]
        data_dir: PathBuf,
    },
    /// Load an exported state into an empty data directory.
    Import {
        input: PathBuf,
        #[arg(long, env = "SOCIALDAO_DATA_DIR")]
        data_dir: PathBuf,
    },
    /// Print the transaction catalog, one kind per line.
    Catalog {
        #[arg(long)]
        json: bool,
    },
}

fn fail(code: &str, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error[{code}]: {msg}");
    ExitCode::FAILURE
}

fn open(data_dir: &Path) -> Result<Engine, ExitCode> {
    Engine::open(EngineConfig { data_dir: Some(data_dir.to_path_buf()), ..Default::default() })
        .map_err(|e| fail(e.code(), e))
}

pub fn run(cli: Cli) -> ExitCode {
    match cli.command {
        Verb::Init { data_dir } => match open(&data_dir) {
            Ok(engine) => match engine.flush() {
                Ok(()) => {
                    println!("initialized {} (ledger_len {})", data_dir.display(), engine.ledger().len());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e.code(), e),
            },
            Err(code) => code,
        },
        Verb::Serve { host, port, data_dir, rubric } => {
            let config = GatewayConfig { host: Some(host), port, data_dir, rubric };
            serve_blocking(config)
        }
        Verb::RunScenario { script, rubric, out } => {
            let rubric = match load_rubric(rubric.as_ref()) {
                Ok(r) => r,
                Err(e) => return fail("BadConfig", e),
            };
            let script = match ScenarioScript::load(&script) {
                Ok(s) => s,
                Err(e) => return fail(e.code(), e),
            };
            let (transcript, status) = match run_scenario(&script, EngineConfig { rubric, ..Default::default() }) {
                Ok(t) => (t, ExitCode::SUCCESS),
                Err(e) => match e.transcript() {
                    Some(t) => {
                        eprintln!("error[{}]: {e}", e.code());
                        (t.clone(), ExitCode::FAILURE)
                    }
                    None => return fail(e.code(), e),
                },
            };
            let text = transcript.to_json();
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, text) {
                        return fail("Io", e);
                    }
                }
                None => print!("{text}"),
            }
            status
        }
        Verb::Verify { data_dir, ledger } => {
            let path = match (ledger, data_dir) {
                (Some(p), _) => p,
                (None, Some(d)) => d.join("ledger.jsonl"),
                (None, None) => return fail("BadConfig", "pass --ledger or --data-dir"),
            };
            let records = match read_records(&path) {
                Ok(r) => r,
                Err(e) => return fail("Storage", format!("{}: {e}", path.display())),
            };
            let report = ledger::verify_records(&records);
            println!("{}", json!({ "ok": report.ok, "first_bad_seq": report.first_bad_seq, "records": records.len() }));
            if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Verb::Export { out, data_dir } => match open(&data_dir) {
            Ok(engine) => match std::fs::write(&out, engine.export_bytes()) {
                Ok(()) => {
                    println!("exported {} records to {}", engine.ledger().len(), out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail("Io", e),
            },
            Err(code) => code,
        },
        Verb::Import { input, data_dir } => {
            let bytes = match std::fs::read(&input) {
                Ok(b) => b,
                Err(e) => return fail("Io", format!("{}: {e}", input.display())),
            };
            let mut engine = match open(&data_dir) {
                Ok(e) => e,
                Err(code) => return code,
            };
            match engine.import_bytes(&bytes) {
                Ok(receipt) => {
                    println!("{}", json!(receipt));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e.code(), e),
            }
        }
        Verb::Catalog { json } => {
            let mut out = std::io::stdout().lock();
            let kinds = ledger::catalog();
            let written = if json {
                writeln!(out, "{}", serde_json::to_string_pretty(kinds).expect("catalog serializes"))
            } else {
                kinds.iter().try_for_each(|k| {
                    writeln!(out, "{}\t{}\t{}\t{}", k.kind_ref(), k.description, k.stakeholders.join(", "), k.info_exchanged)
                })
            };
            match written {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail("Io", e),
            }
        }
    }
}

fn serve_blocking(config: GatewayConfig) -> ExitCode {
    let rt = match tokio::runtime::Builder::new_multi_thread().enable_all().build() {
        Ok(rt) => rt,
        Err(e) => return fail("Io", e),
    };
    rt.block_on(async move {
        let handle = match crate::http::serve(&config).await {
            Ok(h) => h,
            Err(e) => return fail(e.code(), e),
        };
        println!("listening on http://{}", handle.addr);
        let _ = tokio::signal::ctrl_c().await;
        tracing::info!("shutting down");
        match handle.shutdown().await {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(e.code(), e),
        }
    })
}
