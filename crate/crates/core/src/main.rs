fn main() {
    std::process::exit(sideinfo::cli::main_with_args(std::env::args_os()));
}
