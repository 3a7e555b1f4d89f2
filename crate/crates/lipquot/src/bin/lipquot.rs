fn main() { std::process::exit(lipquot::cli::run(std::env::args().skip(1))); }
