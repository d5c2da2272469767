fn main() {
    std::process::exit(edgeroute::cli::run(std::env::args_os()));
}
