fn main() {
    std::process::exit(funcsp::cli::run());
}
