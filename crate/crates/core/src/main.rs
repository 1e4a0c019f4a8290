fn main() {
    std::process::exit(freedyn::cli::main());
}
