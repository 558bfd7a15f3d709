fn main() {
    std::process::exit(hifwatch::cli::main_exit_code());
}
