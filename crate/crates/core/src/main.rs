fn main() {
    std::process::exit(gapsearch::cli::run(std::env::args_os()));
}
