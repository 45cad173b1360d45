fn main() {
    std::process::exit(cpmetric_cli::run_command(std::env::args_os()));
}
