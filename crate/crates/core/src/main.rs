fn main() {
    std::process::exit(offtweet::cli::main_with_args(std::env::args_os()));
}
