fn main() {
    std::process::exit(sdrvm::cli::run(std::env::args_os()));
}
