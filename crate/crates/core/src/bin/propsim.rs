use std::process::ExitCode;

fn main() -> ExitCode {
    let cmd = match propsim::cli::parse_args(std::env::args_os()) {
        Ok(cmd) => cmd,
        Err(e) => e.exit(),
    };
    let code = propsim::cli::execute(&cmd, &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(code as u8)
}
