fn main() {
    std::process::exit(netbandit_cli::main_with(std::env::args_os()));
}
