fn main() {
    std::process::exit(freqadapt_cli::run(std::env::args_os()));
}
