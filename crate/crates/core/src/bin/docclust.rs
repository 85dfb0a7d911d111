fn main() {
    std::process::exit(docclust::cli::run(std::env::args_os()));
}
