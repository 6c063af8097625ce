fn main() {
    std::process::exit(colstsm::cli::run(std::env::args_os()));
}
