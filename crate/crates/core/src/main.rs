use std::process::ExitCode;

fn main() -> ExitCode {
    let stdout = std::io::stdout();
    match serre_spectrum::cli::run(std::env::args_os(), &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message.trim_end());
            ExitCode::from(e.code as u8)
        }
    }
}
