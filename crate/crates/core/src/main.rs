fn main() {
    std::process::exit(tileupb::cli::main_with_args(std::env::args_os()));
}
