fn main() {
    std::process::exit(extpauli::cli::run(std::env::args_os()));
}
