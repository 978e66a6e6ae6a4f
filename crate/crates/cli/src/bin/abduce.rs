fn main() {
    std::process::exit(abduce_cli::abduce_main(std::env::args_os()));
}
