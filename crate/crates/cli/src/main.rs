use clap::Parser;
use usd_cli::error::{EXIT_INVALID, EXIT_OK};
use usd_cli::{run, Cli};

fn main() {
    // clap's own usage errors would exit with 2, which is reserved for I/O.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            });
        }
    };
    let code = match run(&cli, &mut std::io::stdout().lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
