fn main() {
    std::process::exit(r1dl::cli::run(std::env::args_os()));
}
