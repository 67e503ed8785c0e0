use exrate::cli;

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(cli::main_from_args(argv));
}
