fn main() {
    std::process::exit(hpnn::cli::dispatch(std::env::args()));
}
