fn main() {
    std::process::exit(manimet_cli::run(std::env::args_os()));
}
