fn main() {
    let code = perfrec::cli::dispatch(std::env::args_os());
    std::process::exit(code);
}
