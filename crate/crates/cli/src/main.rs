fn main() {
    std::process::exit(beamctl::main_with(std::env::args_os()));
}
