fn main() -> std::process::ExitCode {
    mqpec::cli::main()
}
