use clap::Parser;

fn main() {
    acflab::cli::init_threads();
    let cli = match acflab::cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not usage errors.
            if e.use_stderr() {
                eprint!("{e}");
                std::process::exit(acflab::cli::EXIT_USAGE);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    match acflab::cli::run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(acflab::cli::EXIT_USAGE);
        }
    }
}
