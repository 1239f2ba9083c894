use clap::Parser;

fn main() {
    let cli = hierqa::cli::Cli::parse();
    match hierqa::cli::run(cli) {
        Ok(out) => {
            print!("{out}");
            if !out.ends_with('\n') {
                println!();
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
