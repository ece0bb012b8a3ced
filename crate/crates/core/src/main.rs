fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(rayleigh_gas::cli_io::run_command(&args));
}
