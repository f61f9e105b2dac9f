fn main() {
    std::process::exit(vidtext::cli::run(std::env::args_os()));
}
