fn main() {
    std::process::exit(aerocouple::cli::main_with_args(std::env::args_os()));
}
