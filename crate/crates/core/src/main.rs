fn main() {
    std::process::exit(proctor_dc::cli::main());
}
