fn main() {
    std::process::exit(pixrel::cli::main());
}
