fn main() {
    std::process::exit(roomcast::cli::run_cli(std::env::args_os()));
}
