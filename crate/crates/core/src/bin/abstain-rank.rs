fn main() {
    std::process::exit(abstain_rank::cli::run(std::env::args_os()));
}
