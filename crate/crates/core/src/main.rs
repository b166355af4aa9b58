fn main() {
    std::process::exit(mautner::cli::run(std::env::args_os()));
}
