fn main() -> std::process::ExitCode {
    logcov::cli::main()
}
