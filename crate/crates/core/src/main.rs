fn main() {
    std::process::exit(quintic_lab::cli::main_with_args(std::env::args_os()));
}
