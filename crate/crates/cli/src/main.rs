mod commands;
mod config;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde_json::{json, Value};

use commands::{run, Artifact, RunError, Table};
use config::{resolve, Cli, RunConfig};

const EXIT_ASSERTION: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn document(cfg: &RunConfig, artifact: &Artifact) -> Value {
    let mut doc = json!({
        "config": cfg,
        "result": artifact.result,
        "checks": artifact.checks,
        "passed": artifact.checks.iter().all(|c| c.passed),
    });
    if cfg.timestamp {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        doc["timestamp_unix"] = json!(secs);
    }
    doc
}

fn write_csv(path: &Path, table: &Table) -> Result<(), String> {
    let mut w = csv::Writer::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    w.write_record(&table.header).map_err(|e| e.to_string())?;
    for row in &table.rows {
        w.write_record(row).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

fn emit(cfg: &RunConfig, artifact: &Artifact) -> Result<(), String> {
    let text = serde_json::to_string_pretty(&document(cfg, artifact)).map_err(|e| e.to_string())? + "\n";
    match &cfg.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            let name = cfg.command.name();
            fs::write(dir.join(format!("{name}.json")), text).map_err(|e| e.to_string())?;
            if let Some(table) = &artifact.table {
                write_csv(&dir.join(format!("{name}.csv")), table)?;
            }
        }
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let cfg = match resolve(cli.command, &cli.flags) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(threads) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("configuration error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let artifact = match run(&cfg) {
        Ok(a) => a,
        Err(RunError::Config(e)) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(RunError::Runtime(e)) => {
            eprintln!("computation failed: {e}");
            return ExitCode::from(EXIT_ASSERTION);
        }
    };
    if let Err(e) = emit(&cfg, &artifact) {
        eprintln!("cannot write output: {e}");
        return ExitCode::from(EXIT_ASSERTION);
    }
    let failed: Vec<&str> = artifact.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("assertion failed: {}", failed.join(", "));
        ExitCode::from(EXIT_ASSERTION)
    }
}
