mod commands;
mod output;
mod spec;

use std::process::ExitCode;

use bcov_core::Error;
use clap::Parser;

use commands::Context;
use spec::{Cli, RunSpec};

fn load_spec(cli: Cli) -> Result<(RunSpec, usize, bool), Error> {
    let mut spec = match (&cli.spec, cli.command) {
        (Some(_), Some(_)) => return Err(Error::Domain("give either --spec or a subcommand, not both".into())),
        (None, None) => return Err(Error::Domain("missing subcommand (see --help)".into())),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Domain(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<RunSpec>(&text).map_err(|e| Error::Domain(format!("bad run spec: {e}")))?
        }
        (None, Some(command)) => RunSpec { command, seed: None, stream: 0, trials: None, format: Default::default() },
    };
    spec.seed = cli.seed.or(spec.seed);
    spec.stream = cli.stream.unwrap_or(spec.stream);
    spec.trials = cli.trials.or(spec.trials);
    spec.format = cli.format.unwrap_or(spec.format);
    Ok((spec, cli.workers, cli.emit_spec))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load_spec(cli).and_then(|(spec, workers, emit)| {
        if emit {
            let text = serde_json::to_string_pretty(&spec).expect("run spec serializes");
            return Ok(format!("{text}\n"));
        }
        let ctx = Context { seed: spec.seed, stream: spec.stream, trials: spec.trials, workers };
        commands::run(&spec.command, &ctx).map(|v| output::render(&v, spec.format))
    });
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("bcov: {e}");
            ExitCode::from(match e {
                Error::Domain(_) => 2,
                Error::Capacity(_) => 3,
            })
        }
    }
}
