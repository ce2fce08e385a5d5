fn main() {
    std::process::exit(epic_cli::main_with_args(std::env::args_os()));
}
