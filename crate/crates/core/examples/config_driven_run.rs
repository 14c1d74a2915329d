//! The configuration file grammar driving a run and a study.
//!
//! `cargo run --release --example config_driven_run`

use hdg_fsi::cli::{self, Study};
use hdg_fsi::config::RunConfig;

fn main() -> hdg_fsi::Result<()> {
    let out = std::env::temp_dir().join("hdg-fsi-config-example");
    let text = format!(
        "# polynomial solution, reproduced up to round-off\n\
         problem = exactness\n\
         k = 0,1,2\n\
         n = 2,4\n\
         L = 4\n\
         output = {}\n",
        out.display()
    );
    let cfg = RunConfig::parse(&text)?;
    let report = cli::convergence(&cfg, Study::H)?;
    for r in &report.records {
        println!("k={} h={} e_sigma={:.1e} e_u={:.1e}", r.k, r.h, r.e_sigma, r.e_u);
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    println!("--- resolved configuration ---\n{}", cfg.resolved());
    Ok(())
}
