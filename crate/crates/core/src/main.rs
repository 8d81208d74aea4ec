fn main() {
    std::process::exit(shocklab::cli::run_cli(std::env::args_os()));
}
