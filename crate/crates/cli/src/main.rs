fn main() {
    std::process::exit(dymgnn_cli::main_with_args(std::env::args_os()));
}
