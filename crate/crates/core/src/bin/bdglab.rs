fn main() {
    std::process::exit(bdg_lab::cli::run(std::env::args_os()));
}
