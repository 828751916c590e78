fn main() {
    std::process::exit(ramstat::cli::main_with_args(std::env::args_os()));
}
