fn main() {
    std::process::exit(fedsim::cli::main_with_args(std::env::args_os()));
}
