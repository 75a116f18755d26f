fn main() {
    std::process::exit(clinseek_cli::run(std::env::args_os()));
}
