fn main() {
    std::process::exit(alphafence::cli::run_cli(std::env::args_os()));
}
