use clap::Parser;

fn main() {
    let cli = jinxin::cli::Cli::parse();
    if let Err(e) = jinxin::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
