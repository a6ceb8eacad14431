fn main() -> std::process::ExitCode {
    itnn::cli::main()
}
