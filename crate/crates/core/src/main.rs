fn main() {
    std::process::exit(vvv_mhd::cli::dispatch(std::env::args_os()));
}
