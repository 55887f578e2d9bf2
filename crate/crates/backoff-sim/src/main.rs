fn main() {
    std::process::exit(backoff_sim::cli::run(std::env::args_os()));
}
