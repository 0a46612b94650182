fn main() {
    std::process::exit(heatcast::cli::cli_main(std::env::args_os()));
}
