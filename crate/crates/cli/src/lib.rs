//! The `ppm` command-line front end.

pub mod args;
pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
pub mod reference;
pub mod report;

use args::{Cli, Command, ConfigArg};
use config::RunConfig;
use error::Result;

fn load(arg: &ConfigArg) -> Result<(RunConfig, Option<String>)> {
    match &arg.config {
        Some(path) => {
            let (config, raw) = RunConfig::load(path)?;
            Ok((config, Some(raw)))
        }
        None => Ok((RunConfig::default(), None)),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { config, data } => {
            let (mut c, _) = load(&config)?;
            data.apply(&mut c);
            commands::validate(&c)
        }
        Command::Preprocess { config, data, out, ngram } => {
            let (mut c, raw) = load(&config)?;
            data.apply(&mut c);
            out.apply(&mut c);
            if ngram.is_some() {
                c.ngram = ngram;
            }
            commands::preprocess(&c, raw.as_deref())
        }
        Command::Train { config, data, out, seed, model, budget } => {
            let (mut c, raw) = load(&config)?;
            data.apply(&mut c);
            out.apply(&mut c);
            seed.apply(&mut c);
            model.apply(&mut c);
            budget.apply(&mut c);
            commands::train_one(&c, raw.as_deref())
        }
        Command::Gridsearch { config, data, out, seed, model_type, budget, grid_limit, jobs } => {
            let (mut c, raw) = load(&config)?;
            data.apply(&mut c);
            out.apply(&mut c);
            seed.apply(&mut c);
            budget.apply(&mut c);
            if model_type.is_some() {
                c.model_type = model_type;
            }
            if grid_limit.is_some() {
                c.grid_limit = grid_limit;
            }
            if let Some(j) = jobs {
                c.jobs = j;
            }
            commands::gridsearch(&c, raw.as_deref())
        }
        Command::Select { config, grid, out, lambda } => {
            let (mut c, raw) = load(&config)?;
            if out.is_some() {
                c.output_dir = out;
            }
            if let Some(l) = lambda {
                c.lambda = l;
            }
            commands::select(&c, raw.as_deref(), &grid)
        }
        Command::Evaluate { config, data, out, checkpoint, f1_mode } => {
            let (mut c, raw) = load(&config)?;
            data.apply(&mut c);
            out.apply(&mut c);
            if let Some(m) = f1_mode {
                c.f1_mode = m.into();
            }
            commands::evaluate(&c, raw.as_deref(), &checkpoint)
        }
        Command::Report { inputs, out } => report::report(&inputs, &out),
        Command::Reference => {
            print!("{}", reference::markdown());
            Ok(())
        }
    }
}
