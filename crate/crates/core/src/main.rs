fn main() {
    std::process::exit(simo_sounder::cli::run(std::env::args_os()));
}
