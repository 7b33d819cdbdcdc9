fn main() {
    let code = coprime_tdm::cli::run(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code);
}
