fn main() {
    std::process::exit(ztopo::cli::main_with_args(std::env::args_os()));
}
