fn main() {
    std::process::exit(kapitza_cli::main_with(std::env::args_os()));
}
