fn main() -> std::process::ExitCode {
    loadcurve::cli::main_with(std::env::args_os())
}
