fn main() {
    std::process::exit(nudgek::cli::run(std::env::args()));
}
