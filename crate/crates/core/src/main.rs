fn main() {
    std::process::exit(gorbit::cli::run());
}
