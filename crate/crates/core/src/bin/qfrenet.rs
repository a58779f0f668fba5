fn main() {
    std::process::exit(quantum_frenet::cli::main_with_args(std::env::args_os()));
}
