fn main() {
    std::process::exit(abduce_cli::mpe_main(std::env::args_os()));
}
