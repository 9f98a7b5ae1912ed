fn main() -> std::process::ExitCode {
    proxsel::cli::main()
}
