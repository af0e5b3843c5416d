fn main() {
    std::process::exit(adiabatic_lab::cli::main_with_args(std::env::args_os()));
}
