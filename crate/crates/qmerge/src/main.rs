use clap::Parser;
use qmerge::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = run(cli, &mut stdout) {
        eprintln!("qmerge: {}", e.diagnostic());
        std::process::exit(e.exit_code());
    }
}
