use std::io::Write;

fn main() {
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let mut err = std::io::stderr();
    let code = bshap_cli::run(std::env::args_os(), &mut out, &mut err);
    if out.flush().is_err() && code == bshap_cli::EXIT_OK {
        std::process::exit(bshap_cli::EXIT_INTERNAL);
    }
    drop(out);
    std::process::exit(code);
}
