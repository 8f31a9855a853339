fn main() {
    std::process::exit(frailtykit::cli::run(std::env::args_os()));
}
