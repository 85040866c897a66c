fn main() {
    std::process::exit(qdp::cli::run(std::env::args_os()));
}
