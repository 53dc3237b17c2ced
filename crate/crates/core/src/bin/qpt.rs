fn main() {
    std::process::exit(qpt::cli::run(std::env::args_os()));
}
