fn main() {
    std::process::exit(conformal_kit::cli::main());
}
