fn main() {
    std::process::exit(laca_core::cli::run_command(std::env::args_os()));
}
