fn main() {
    std::process::exit(timt_io::cli::run(std::env::args_os()));
}
