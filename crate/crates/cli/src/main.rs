fn main() {
    std::process::exit(fourier_contour_cli::run(std::env::args_os()));
}
