fn main() {
    std::process::exit(anisocs_core::cli::run(std::env::args_os()));
}
