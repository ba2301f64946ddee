fn main() {
    let code = skysim::cli::main_with_args(std::env::args_os());
    std::process::exit(code);
}
