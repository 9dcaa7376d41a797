fn main() {
    std::process::exit(gpfo_cli::cli::main_with(std::env::args_os()));
}
