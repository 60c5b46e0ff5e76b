fn main() {
    std::process::exit(tamecusp_cli::run_command(std::env::args_os()));
}
