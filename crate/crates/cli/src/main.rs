fn main() {
    std::process::exit(continuity_cli::run(std::env::args_os()));
}
