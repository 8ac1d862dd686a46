fn main() {
    std::process::exit(hom_tomo::cli::main_with_args(std::env::args_os()));
}
