fn main() {
    std::process::exit(quasistat::cli::run(std::env::args_os()));
}
