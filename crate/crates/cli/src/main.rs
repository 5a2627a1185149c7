use clap::Parser;
use tjs_cli::{execute, Cli};

fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let code = execute(&cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
