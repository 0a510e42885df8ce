fn main() {
    std::process::exit(rdk_harness::cli::main_with(std::env::args_os()));
}
