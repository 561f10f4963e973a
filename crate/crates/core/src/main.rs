fn main() {
    std::process::exit(sensorshift::cli::run(std::env::args_os()));
}
