fn main() -> std::process::ExitCode {
    ivkit::cli::main()
}
