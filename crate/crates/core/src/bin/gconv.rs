fn main() {
    std::process::exit(gconv::cli::run(std::env::args_os()));
}
