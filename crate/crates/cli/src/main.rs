fn main() {
    std::process::exit(featremesh_cli::run(std::env::args_os()));
}
