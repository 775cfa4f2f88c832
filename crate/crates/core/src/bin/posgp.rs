fn main() {
    std::process::exit(posgp::cli::run(std::env::args_os()));
}
