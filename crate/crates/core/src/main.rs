fn main() {
    std::process::exit(driftsim::cli::main_with_args(std::env::args_os()));
}
