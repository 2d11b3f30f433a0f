fn main() {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = qds::cli::parse_and_dispatch(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    std::process::exit(code);
}
