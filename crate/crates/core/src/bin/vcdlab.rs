fn main() {
    std::process::exit(vcdlab::cli::main_with(std::env::args_os()));
}
