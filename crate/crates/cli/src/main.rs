fn main() {
    std::process::exit(gradflux::run(std::env::args_os()));
}
