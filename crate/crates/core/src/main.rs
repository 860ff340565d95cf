fn main() {
    std::process::exit(rangeview::cli::run(std::env::args()));
}
