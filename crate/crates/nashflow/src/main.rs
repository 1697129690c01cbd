fn main() {
    std::process::exit(nashflow::cli::run(std::env::args_os()));
}
