fn main() {
    std::process::exit(robust_spca::cli::run(std::env::args_os()));
}
