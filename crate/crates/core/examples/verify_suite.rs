//! Runs a verification suite programmatically and prints its table.
//! Usage: cargo run --release --example verify_suite -- [suite]

use subgauss::verify::{run_suite, summary_table, Suite, SuiteConfig};
use subgauss::Result;

fn main() -> Result<()> {
    let name = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "correlation".into());
    let suite: Suite = name.parse()?;
    let cfg = SuiteConfig {
        samples: 50_000,
        ..SuiteConfig::default()
    };
    let results = run_suite(suite, &cfg)?;
    print!("{}", summary_table(&results));
    let unexpected = results.iter().filter(|r| !r.as_expected()).count();
    println!("{} checks, {unexpected} unexpected", results.len());
    Ok(())
}
