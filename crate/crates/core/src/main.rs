fn main() {
    std::process::exit(arcplan::cli::run(std::env::args_os()));
}
