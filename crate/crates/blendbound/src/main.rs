fn main() {
    std::process::exit(blendbound::cli::run(std::env::args_os()));
}
