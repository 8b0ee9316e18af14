fn main() {
    std::process::exit(tdnet::cli::dispatch(std::env::args_os()));
}
