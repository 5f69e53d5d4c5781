fn main() {
    std::process::exit(citecentral::cli::run(std::env::args_os()));
}
