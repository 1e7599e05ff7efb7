fn main() {
    std::process::exit(lcm::cli::main_cli(std::env::args().collect()));
}
