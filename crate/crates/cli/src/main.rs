mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use commands::{write_json, Failure};
use config::{Cli, RunConfig};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            if code != 0 {
                let out = out_dir_from_args();
                let diag = json!({ "command": null, "exit_code": 1, "kind": "usage", "message": e.to_string(), "details": null });
                let _ = write_json(&out, "diagnostic.json", diag);
            }
            return ExitCode::from(code);
        }
    };
    let command = cli.command.name();
    let fallback_out = cli.out.clone().unwrap_or_else(|| "hvisc-out".into());
    let (out, result) = match RunConfig::from_cli(cli) {
        Ok(rc) => {
            let r = commands::run(&rc);
            (rc.out, r)
        }
        Err(m) => (fallback_out, Err(Failure::Usage(m))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let diag = f.diagnostic(command);
            eprintln!("hvisc {command}: {}", diag["message"].as_str().unwrap_or(""));
            if let Err(Failure::Library(e)) = write_json(&out, "diagnostic.json", diag) {
                eprintln!("hvisc: cannot write diagnostic: {e}");
            }
            ExitCode::from(f.exit_code() as u8)
        }
    }
}

fn out_dir_from_args() -> std::path::PathBuf {
    let args: Vec<String> = std::env::args().collect();
    for (i, a) in args.iter().enumerate() {
        if let Some(v) = a.strip_prefix("--out=") {
            return v.into();
        }
        if a == "--out" {
            if let Some(v) = args.get(i + 1) {
                return v.into();
            }
        }
    }
    "hvisc-out".into()
}
