fn main() {
    std::process::exit(gazeflow::cli::run(std::env::args_os()));
}
