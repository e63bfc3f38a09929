fn main() {
    std::process::exit(stringlmi::cli::main_with_args(std::env::args_os()));
}
