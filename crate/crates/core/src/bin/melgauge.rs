use clap::Parser;
use melgauge_core::cli::{run, Cli};

fn main() {
    let outcome = run(Cli::parse());
    print!("{}", outcome.stdout);
    for line in &outcome.diagnostics {
        eprintln!("{line}");
    }
    std::process::exit(outcome.exit_code);
}
