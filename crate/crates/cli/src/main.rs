fn main() {
    std::process::exit(somor_cli::run(std::env::args_os()));
}
