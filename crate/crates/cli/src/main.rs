fn main() {
    std::process::exit(qcap_cli::run(std::env::args_os()));
}
