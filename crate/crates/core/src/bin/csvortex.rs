fn main() {
    std::process::exit(csvortex::cli::run_command(std::env::args_os()));
}
