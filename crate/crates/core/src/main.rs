fn main() {
    std::process::exit(greens_reflect::cli::run(std::env::args_os()));
}
