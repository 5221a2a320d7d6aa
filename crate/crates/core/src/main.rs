fn main() {
    std::process::exit(hbmcp::cli::main_with_args(std::env::args_os()));
}
