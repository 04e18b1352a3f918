fn main() {
    std::process::exit(tachibana::cli::run());
}
