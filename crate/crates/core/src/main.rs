fn main() {
    std::process::exit(sylvec::cli::run());
}
