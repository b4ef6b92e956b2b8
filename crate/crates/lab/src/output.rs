//! CSV and SVG artifacts. Every file starts with the provenance header.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;

/// Artifact format version, bumped when a column layout changes.
pub const ARTIFACT_VERSION: &str = concat!("freestream-lab/", env!("CARGO_PKG_VERSION"), "/1");

/// Provenance lines written at the top of every artifact.
#[derive(Clone, Debug, PartialEq)]
pub struct Header {
    pub config_hash: String,
    pub grid_fingerprint: u64,
    pub seed: Option<u64>,
    /// Speed cutoff of the velocity quadrature.
    pub rho_max: f64,
}

impl Header {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        let grid_fingerprint = cfg.boundary_grid().map_or(0, |g| g.fingerprint());
        Header { config_hash: cfg.hash(), grid_fingerprint, seed: cfg.seed, rho_max: cfg.rho_max() }
    }

    /// Lines prefixed with `prefix` (`#` for CSV).
    pub fn lines(&self, prefix: &str) -> String {
        let seed = self.seed.map_or("none".to_string(), |s| s.to_string());
        format!(
            "{prefix} config_hash={}\n{prefix} grid_fingerprint={:016x}\n{prefix} seed={seed}\n{prefix} rho_max={}\n{prefix} version={ARTIFACT_VERSION}\n",
            self.config_hash, self.grid_fingerprint, self.rho_max
        )
    }
}

/// A named numeric table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    /// File stem, e.g. `decay`.
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_csv<W: Write>(&self, header: &Header, mut out: W) -> io::Result<()> {
        out.write_all(header.lines("#").as_bytes())?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|x| x.to_string()))?;
        }
        w.flush()
    }

    /// Writes `<dir>/<name>.csv` and returns its path.
    pub fn save(&self, header: &Header, dir: &Path) -> io::Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.csv", self.name));
        self.write_csv(header, io::BufWriter::new(fs::File::create(&path)?))?;
        Ok(path)
    }
}

/// Log-log line plot of `ys` against column `x`; nonpositive points are dropped.
pub fn loglog_svg(header: &Header, title: &str, table: &Table, x: &str, ys: &[&str]) -> Option<String> {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const PAD: f64 = 50.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
    let xs = table.column(x)?;
    let series: Vec<(&str, Vec<(f64, f64)>)> = ys
        .iter()
        .filter_map(|name| {
            let y = table.column(name)?;
            let pts: Vec<(f64, f64)> = xs.iter().zip(y).filter(|(a, b)| **a > 0.0 && *b > 0.0 && b.is_finite()).map(|(a, b)| (a.log10(), b.log10())).collect();
            (pts.len() >= 2).then_some((*name, pts))
        })
        .collect();
    if series.is_empty() {
        return None;
    }
    let all = series.iter().flat_map(|s| s.1.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(a, b) in all {
        x0 = x0.min(a);
        x1 = x1.max(a);
        y0 = y0.min(b);
        y1 = y1.max(b);
    }
    let sx = |a: f64| PAD + (a - x0) / (x1 - x0).max(1e-12) * (W - 2.0 * PAD);
    let sy = |b: f64| H - PAD - (b - y0) / (y1 - y0).max(1e-12) * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(s, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">");
    let _ = writeln!(s, "<!--\n{}-->", header.lines(""));
    let _ = writeln!(s, "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>", W - 2.0 * PAD, H - 2.0 * PAD);
    let _ = writeln!(s, "<text x=\"{}\" y=\"20\" text-anchor=\"middle\">{title}</text>", W / 2.0);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">log10 {x}: [{x0:.2}, {x1:.2}]</text>", W / 2.0, H - 15.0);
    let _ = writeln!(s, "<text x=\"12\" y=\"{}\" transform=\"rotate(-90 12 {})\" text-anchor=\"middle\">log10 value: [{y0:.2}, {y1:.2}]</text>", H / 2.0, H / 2.0);
    for (i, (name, pts)) in series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(a, b)| format!("{:.2},{:.2}", sx(a), sy(b))).collect();
        let _ = writeln!(s, "<polyline fill=\"none\" stroke=\"{c}\" stroke-width=\"1.5\" points=\"{}\"/>", path.join(" "));
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" fill=\"{c}\">{name}</text>", W - PAD - 120.0, PAD + 16.0 * (i as f64 + 1.0));
    }
    s.push_str("</svg>\n");
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_starts_with_provenance() {
        let cfg = ExperimentConfig::default();
        let h = Header::new(&cfg);
        let mut t = Table::new("x", &["t", "mass"]);
        t.push(vec![0.5, 1.0]);
        t.push(vec![1.0, 0.25]);
        let mut buf = Vec::new();
        t.write_csv(&h, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# config_hash=") && lines[0].len() == "# config_hash=".len() + 64);
        assert!(lines[1].starts_with("# grid_fingerprint="));
        assert_eq!(lines[2], "# seed=20240611");
        assert_eq!(lines[3], "# rho_max=8");
        assert!(lines[4].starts_with("# version=freestream-lab/"));
        assert_eq!(&lines[5..], ["t,mass", "0.5,1", "1,0.25"]);
        let svg = loglog_svg(&h, "decay", &t, "t", &["mass"]).unwrap();
        assert!(svg.contains("<polyline") && svg.contains("config_hash="));
    }
}
