fn main() {
    std::process::exit(irs_lab::harness::cli_run(std::env::args_os()));
}
