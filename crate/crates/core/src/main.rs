fn main() {
    std::process::exit(clusterdist::cli::run(std::env::args_os()));
}
