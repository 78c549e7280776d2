fn main() {
    std::process::exit(ogaprox::cli::main_with_args(std::env::args_os()));
}
