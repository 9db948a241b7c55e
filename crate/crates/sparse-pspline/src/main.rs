fn main() {
    std::process::exit(sparse_pspline::cli::run(std::env::args_os()));
}
