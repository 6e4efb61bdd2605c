fn main() {
    std::process::exit(wildloc::cli::dispatch(std::env::args_os()));
}
