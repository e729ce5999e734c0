fn main() {
    std::process::exit(polythresh::cli::run(std::env::args_os()));
}
