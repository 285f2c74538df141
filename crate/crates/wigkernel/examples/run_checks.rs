//! Run one check suite from a config file (or the defaults) and print the CSV.
//!
//! cargo run --release --example run_checks -- symplectic [run.cfg]

use wigkernel::checks::{run_suite, write_rows};
use wigkernel::io::RunConfig;

fn main() -> wigkernel::Result<()> {
    let mut args = std::env::args().skip(1);
    let suite = args.next().unwrap_or_else(|| "symplectic".into());
    let cfg = match args.next() {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let rows = run_suite(&suite, &cfg)?;
    write_rows(&mut std::io::stdout(), &rows)?;
    Ok(())
}
