use std::process::ExitCode;

use clap::Parser;
use overtopos::cli::{run, Args};

fn main() -> ExitCode {
    let args = Args::parse();
    let out = run(&args);
    if out.code == 2 {
        eprint!("{}", out.text);
    } else {
        print!("{}", out.text);
    }
    ExitCode::from(out.code as u8)
}
