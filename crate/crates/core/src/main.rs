use std::process::ExitCode;

use bfinterp::cli;

fn main() -> ExitCode {
    let outcome = cli::parse(std::env::args_os()).and_then(|inv| {
        let text = cli::execute(&inv)?;
        cli::deliver(&inv, &text)
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string();
            if msg.starts_with("error:") {
                eprint!("{msg}");
            } else {
                eprintln!("error: {msg}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
