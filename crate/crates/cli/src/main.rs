fn main() {
    std::process::exit(superhedge_cli::main_with_args(std::env::args_os()));
}
