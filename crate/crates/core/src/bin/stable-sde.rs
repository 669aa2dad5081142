fn main() {
    std::process::exit(stable_sde::io::run_command(std::env::args_os()));
}
