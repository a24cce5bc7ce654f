use std::io::Write;

fn main() {
    let (code, out) = campusqa::service::cli::dispatch(std::env::args().skip(1));
    if !out.is_empty() {
        let text = format!("{}\n", out.trim_end());
        // A closed pipe (e.g. `| head`) is not an error worth a panic.
        let _ = if code == 0 {
            std::io::stdout().write_all(text.as_bytes())
        } else {
            std::io::stderr().write_all(text.as_bytes())
        };
    }
    std::process::exit(code);
}
