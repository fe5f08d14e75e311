fn main() {
    std::process::exit(brainframe::cli::run(std::env::args_os()));
}
