fn main() {
    std::process::exit(stabledev::cli::run(std::env::args()));
}
