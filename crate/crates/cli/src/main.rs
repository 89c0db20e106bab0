fn main() {
    std::process::exit(zipper_cli::run(std::env::args_os()));
}
