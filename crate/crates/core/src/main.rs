fn main() {
    std::process::exit(binbc::cli::run(std::env::args_os()));
}
