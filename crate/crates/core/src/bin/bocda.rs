fn main() {
    std::process::exit(bocda::cli::run(std::env::args_os()));
}
