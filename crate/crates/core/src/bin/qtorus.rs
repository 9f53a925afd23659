fn main() -> std::process::ExitCode {
    qtorus::cli::main()
}
