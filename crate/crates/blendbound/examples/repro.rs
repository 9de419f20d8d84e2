//! Prints the reference-number table.
use blendbound::repro::{run_all, table};
use blendbound::report::Format;

fn main() -> blendbound::Result<()> {
    let checks = run_all();
    print!("{}", table(&checks).render(Format::Table)?);
    let failed = checks.iter().filter(|c| !c.pass).count();
    println!("{} checks, {failed} failed", checks.len());
    Ok(())
}
