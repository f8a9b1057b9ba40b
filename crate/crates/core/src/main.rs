fn main() {
    std::process::exit(indivisibles::cli::run(std::env::args().skip(1)));
}
