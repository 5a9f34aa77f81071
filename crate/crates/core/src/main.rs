fn main() {
    std::process::exit(fermi_forge::cli::main_with_args(std::env::args_os()));
}
