//! Report and table writers. `report.json` holds only run-deterministic
//! content so identical (config, seed) pairs produce identical bytes;
//! wall-clock timing goes to the `meta.json` sidecar instead.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
pub struct Report<'a, C: Serialize, R: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    /// The statement this run checks, in plain words.
    pub claim: &'a str,
    pub seed: u64,
    pub config: &'a C,
    pub result: &'a R,
    pub verified: bool,
}

pub fn write_report<C: Serialize, R: Serialize>(
    out: &Path,
    report: &Report<'_, C, R>,
) -> io::Result<()> {
    let mut body = serde_json::to_string_pretty(report)?;
    body.push('\n');
    fs::write(out.join("report.json"), body)
}

#[derive(Serialize)]
struct Meta<'a> {
    command: &'a str,
    wall_clock_seconds: f64,
    threads: usize,
}

pub fn write_meta(out: &Path, command: &str, wall_clock_seconds: f64) -> io::Result<()> {
    let meta = Meta {
        command,
        wall_clock_seconds,
        threads: rayon::current_num_threads(),
    };
    let mut body = serde_json::to_string_pretty(&meta)?;
    body.push('\n');
    fs::write(out.join("meta.json"), body)
}

pub fn write_csv<I>(path: &Path, header: &str, rows: I) -> io::Result<()>
where
    I: IntoIterator<Item = String>,
{
    let mut file = io::BufWriter::new(fs::File::create(path)?);
    writeln!(file, "{header}")?;
    for row in rows {
        writeln!(file, "{row}")?;
    }
    file.flush()
}
