fn main() {
    std::process::exit(lsv_cli::main_with(std::env::args_os()));
}
