fn main() {
    std::process::exit(linesec::cli::main_with_args(std::env::args_os()));
}
