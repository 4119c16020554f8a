#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use crate::config::{Cli, Command, Format};

fn run(cli: Cli) -> Result<bool> {
    let run = match &cli.command {
        Command::Reflect(a) => commands::reflect(a)?,
        Command::Badlands(a) => commands::badlands(a)?,
        Command::Wall(a) => commands::wall(a)?,
        Command::Scatlength(a) => commands::scatlength(a)?,
    };
    let mut out: Box<dyn Write> = match &run.config.output {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match run.config.format {
        Format::Csv => run.table.write_csv(&run.config, &mut out)?,
        Format::Json => run.table.write_json(&run.config, &mut out)?,
    }
    out.flush()?;
    Ok(run.ok)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("qreflect: at least one diagnostic exceeded its gate");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("qreflect: {e:#}");
            ExitCode::FAILURE
        }
    }
}
