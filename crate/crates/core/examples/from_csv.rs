// Full analysis of a subject-level CSV (header z,s,y,cell) with the JSON
// result written next to it.
//
// cargo run --release --example from_csv -- data.csv [config.json]
use std::path::PathBuf;

use pstrata::report::RunConfig;

fn main() {
    let mut args = std::env::args().skip(1);
    let Some(data) = args.next().map(PathBuf::from) else {
        eprintln!("usage: from_csv DATA.csv [CONFIG.json]");
        std::process::exit(1);
    };
    let mut cfg = match args.next() {
        Some(p) => RunConfig::load(p).unwrap_or_else(|e| {
            eprintln!("{e}");
            std::process::exit(1)
        }),
        None => RunConfig::default(),
    };
    cfg.output
        .get_or_insert_with(|| data.with_extension("json"));
    let (out, err) = (&mut std::io::stdout(), &mut std::io::stderr());
    match pstrata::cli::cmd_fit(&data, &cfg, true, false, out, err) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(pstrata::cli::exit_code(&e));
        }
    }
}
