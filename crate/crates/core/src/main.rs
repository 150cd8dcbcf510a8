fn main() {
    std::process::exit(blocktoep::cli::run(std::env::args_os()));
}
