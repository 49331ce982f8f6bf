fn main() {
    std::process::exit(defmap::cli::main_with_args(std::env::args_os()));
}
