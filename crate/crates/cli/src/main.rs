use clap::Parser;

fn main() {
    let cli = vwlb_cli::commands::Cli::parse();
    if let Err(e) = vwlb_cli::commands::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
