fn main() {
    std::process::exit(subgauss::cli::main());
}
