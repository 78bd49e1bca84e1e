fn main() {
    std::process::exit(tesh_cli::run(std::env::args_os()).code());
}
