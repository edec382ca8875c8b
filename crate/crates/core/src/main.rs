fn main() {
    std::process::exit(semistable::cli::main_with_args(std::env::args_os()));
}
