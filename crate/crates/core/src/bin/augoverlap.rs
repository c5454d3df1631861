fn main() {
    std::process::exit(augoverlap::cli::main());
}
