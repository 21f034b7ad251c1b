fn main() {
    std::process::exit(corefine::cli::run(std::env::args_os()));
}
