use clap::Parser;
use reachcert::cmd::{run, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help and version requests are not errors
            std::process::exit(if e.use_stderr() { reachcert::report::EXIT_ERROR } else { 0 });
        }
    };
    let code = run(cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
