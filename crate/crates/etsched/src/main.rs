fn main() {
    std::process::exit(etsched::cli::run());
}
