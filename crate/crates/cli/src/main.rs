use std::process::ExitCode;

use clap::Parser;
use gainloss::args::{Action, Cli};
use gainloss::{rerun, run, RunOutput, VERSION};

fn report(output: &RunOutput) {
    for line in &output.summary {
        println!("{line}");
    }
    for file in &output.files {
        println!("wrote {}", file.display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command.into_action() {
        Action::Run(config) => run(&config, &cli.out),
        Action::Rerun(path) => rerun(&path, &cli.out).map(|(config, output)| {
            eprintln!("re-ran {} from {}", config.name(), path.display());
            output
        }),
    };
    match result {
        Ok(output) => {
            report(&output);
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("gainloss {VERSION}: error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
