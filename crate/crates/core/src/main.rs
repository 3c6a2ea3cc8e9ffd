fn main() {
    std::process::exit(panoworld::cli::cli_main(std::env::args_os()));
}
