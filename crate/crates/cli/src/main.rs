fn main() {
    std::process::exit(sdoc_cli::main_with_args(std::env::args_os()));
}
