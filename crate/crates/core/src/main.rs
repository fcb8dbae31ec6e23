fn main() -> std::process::ExitCode {
    ofdma_ltpf::cli::main_from(std::env::args_os())
}
