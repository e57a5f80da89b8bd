fn main() -> std::process::ExitCode {
    factorgcn::cli::run()
}
