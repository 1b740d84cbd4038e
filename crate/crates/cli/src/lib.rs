//! Command-line pipeline around the `vlbias` library.
//!
//! Every subcommand writes its artifacts below `--out-dir/<stage>/` and
//! appends a [`manifest::RunManifest`] line to `--out-dir/runs.jsonl`.

pub mod analysis;
pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod svg;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::commands::Ctx;
use crate::config::PipelineConfig;
use crate::error::CliResult;
use crate::manifest::RunManifest;

pub fn run(cli: Cli) -> CliResult<RunManifest> {
    if let Some(dir) = &cli.global.cache_dir {
        std::env::set_var(vlbias::adapter::MODEL_CACHE_ENV, dir);
    }
    let ctx = Ctx {
        seed: cli.global.seed,
        out_dir: cli.global.out_dir.clone(),
        config: PipelineConfig::load(cli.global.config.as_deref())?,
    };
    match &cli.command {
        Command::Curate(a) => commands::curate::run(&ctx, a),
        Command::Prompts(a) => commands::prompts::run(&ctx, a),
        Command::Evaluate(a) => commands::evaluate::run(&ctx, a),
        Command::Analyze(a) => commands::analyze::run(&ctx, a),
        Command::Debias(a) => commands::debias::run(&ctx, a),
        Command::Report(a) => commands::report::run(&ctx, a),
        Command::Correlate(a) => commands::correlate::run(&ctx, a),
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}
