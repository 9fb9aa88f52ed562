fn main() {
    std::process::exit(bbmh::cli::run(std::env::args_os()));
}
