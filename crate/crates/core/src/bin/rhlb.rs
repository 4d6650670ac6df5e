fn main() {
    std::process::exit(rhlb::cli::run(std::env::args_os()));
}
