//! Rate tables from error records, with the saturation marker.
//!
//! `cargo run --example reporting_tables`

use hdg_fsi::reporting::{parse_csv, to_csv, to_markdown, ErrorRecord, Refinement};

fn main() -> hdg_fsi::Result<()> {
    let records: Vec<ErrorRecord> = [4usize, 8, 16, 32]
        .iter()
        .map(|&n| {
            let h = 1.0 / n as f64;
            ErrorRecord {
                k: 1,
                h,
                dt: 0.1 * h.powf(1.5),
                steps: n,
                e_sigma: 3.0 * h * h,
                e_u: 0.4 * h.powi(3),
                e_p: if n > 8 { 1e-13 } else { 2.0 * h * h },
                seconds: 0.0,
            }
        })
        .collect();
    print!("{}", to_markdown(&records, Refinement::Space));
    let csv = to_csv(&records, Refinement::Space);
    print!("{csv}");
    assert_eq!(parse_csv(&csv)?, records);
    Ok(())
}
