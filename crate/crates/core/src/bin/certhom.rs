fn main() {
    std::process::exit(certhom::cli::run(std::env::args_os()));
}
