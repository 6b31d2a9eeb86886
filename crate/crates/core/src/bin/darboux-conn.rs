fn main() {
    std::process::exit(darboux_conn::cli::main_with_args(std::env::args_os()));
}
