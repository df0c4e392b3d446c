//! The complete pipeline over all scorers, strategies and budgets, then the
//! report. Rerunning reuses the cached cells.
//!
//! cargo run --release --example full_sweep -- [config_file] [out_dir]

use noveltask::runner::{cmd_report, cmd_sweep, verify_manifest, RunOptions};
use noveltask::ConfigFile;

fn main() -> noveltask::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cf = match args.first() {
        Some(p) => ConfigFile::load(p.as_ref())?,
        None => ConfigFile::default(),
    };
    let out = args.get(1).map_or_else(|| std::env::temp_dir().join("noveltask-sweep"), Into::into);

    let status = cmd_sweep(&cf, &out, &RunOptions::default())?;
    println!("cells computed {}, reused {}", status.computed, status.reused);
    let stale = verify_manifest(&out.join("manifest.json"))?;
    println!("manifest digests verified, {} stale", stale.len());
    let report = cmd_report(&out)?;
    print!("{}", noveltask::io::read_text(&report)?);
    Ok(())
}
