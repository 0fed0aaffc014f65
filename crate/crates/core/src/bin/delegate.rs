fn main() {
    std::process::exit(delegated_persuasion::cli::run_from_args(std::env::args_os()));
}
