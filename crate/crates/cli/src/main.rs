fn main() {
    std::process::exit(qstack_cli::main_with(std::env::args_os()));
}
