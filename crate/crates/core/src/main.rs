fn main() {
    std::process::exit(vbcast::cli::main());
}
