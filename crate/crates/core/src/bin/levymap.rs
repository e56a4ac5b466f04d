fn main() {
    std::process::exit(levymap::cli_app::run(std::env::args_os()));
}
