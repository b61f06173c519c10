fn main() -> std::process::ExitCode {
    tdlsm::cli::main()
}
