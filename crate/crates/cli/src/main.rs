fn main() {
    std::process::exit(cof_forge::run(std::env::args_os()));
}
