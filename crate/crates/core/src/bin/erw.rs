fn main() -> std::process::ExitCode {
    erw_core::cli::main()
}
