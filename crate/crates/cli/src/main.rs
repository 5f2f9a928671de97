use std::process::ExitCode;

fn main() -> ExitCode {
    let config = match icvote_cli::parse_args(std::env::args_os()) {
        Ok(c) => c,
        Err(e) => {
            if e.code == 0 {
                print!("{}", e.message);
            } else {
                eprintln!("{}", e.message.trim_end());
            }
            return ExitCode::from(e.code);
        }
    };
    match icvote_cli::run(&config, &mut std::io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
