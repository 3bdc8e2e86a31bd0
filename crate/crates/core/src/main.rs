fn main() {
    std::process::exit(toda_hbar::cli::main_with(std::env::args_os()));
}
