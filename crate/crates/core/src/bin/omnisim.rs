fn main() {
    std::process::exit(omnisim::cli::run(std::env::args_os()));
}
