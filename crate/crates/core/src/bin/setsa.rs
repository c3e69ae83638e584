fn main() {
    std::process::exit(setsa::cli::main());
}
