fn main() {
    std::process::exit(boolnet::cli::run_cli(std::env::args_os()));
}
