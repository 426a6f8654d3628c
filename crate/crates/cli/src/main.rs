fn main() {
    std::process::exit(kaf_cli::run(std::env::args_os()));
}
