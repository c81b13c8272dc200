fn main() {
    std::process::exit(circgauss::cli::run(std::env::args()));
}
