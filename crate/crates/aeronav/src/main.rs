fn main() {
    std::process::exit(aeronav::cli::run(std::env::args_os()));
}
