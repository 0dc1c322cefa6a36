fn main() {
    std::process::exit(wxperturb::cli::run(std::env::args_os()));
}
