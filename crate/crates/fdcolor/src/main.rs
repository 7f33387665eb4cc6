fn main() {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let outcome = fdcolor::cli::run(&argv);
    let out = fdcolor::cli::out_flag(&argv);
    if let Err(e) = fdcolor::cli::deliver(out.as_deref(), &outcome) {
        eprintln!("io error: {e}");
        std::process::exit(fdcolor::cli::EXIT_INPUT);
    }
    std::process::exit(outcome.code);
}
