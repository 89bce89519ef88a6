//! Ground-state cache: a versioned, fixed-width text table.
//!
//! ```text
//! # critnls ground-state cache v1
//! # dim                       c                   sigma  ...
//!     3 -2.5000000000000000e-01  1.0000000000000000e+00  ...
//! ```
//!
//! Every numeric column is 24 characters wide (`{:>24.16e}`, enough to
//! round-trip an `f64`); `dim`, `m` and `iterations` are right-aligned
//! integers of width 5, 8 and 5. Columns are separated by one space.
//! Rows are keyed by `(dim, c, sigma, a, r_max, m)`; writing a key that
//! is already present replaces its row, and rows stay sorted by key text.

use std::path::Path;

use crate::CliError;

pub const MAGIC: &str = "# critnls ground-state cache v1";

const COLUMNS: [(&str, usize); 12] = [
    ("dim", 5),
    ("c", 24),
    ("sigma", 24),
    ("a", 24),
    ("r_max", 24),
    ("m", 8),
    ("shoot_amplitude", 24),
    ("energy", 24),
    ("grad_sq", 24),
    ("pohozaev", 24),
    ("nehari", 24),
    ("iterations", 5),
];

/// The key columns come first; they fix the run.
const KEY_WIDTH: usize = 5 + 1 + 24 + 1 + 24 + 1 + 24 + 1 + 24 + 1 + 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheRow {
    pub dim: usize,
    pub c: f64,
    pub sigma: f64,
    pub a: f64,
    pub r_max: f64,
    pub m: usize,
    pub shoot_amplitude: f64,
    pub energy: f64,
    pub grad_sq: f64,
    pub pohozaev: f64,
    pub nehari: f64,
    pub iterations: usize,
}

fn f(x: f64) -> String {
    format!("{x:>24.16e}")
}

impl CacheRow {
    pub fn line(&self) -> String {
        [
            format!("{:>5}", self.dim),
            f(self.c),
            f(self.sigma),
            f(self.a),
            f(self.r_max),
            format!("{:>8}", self.m),
            f(self.shoot_amplitude),
            f(self.energy),
            f(self.grad_sq),
            f(self.pohozaev),
            f(self.nehari),
            format!("{:>5}", self.iterations),
        ]
        .join(" ")
    }

    pub fn key(&self) -> String {
        self.line()[..KEY_WIDTH].to_string()
    }

    pub fn parse(line: &str) -> Result<Self, CliError> {
        let bad = |why: String| CliError::Domain(format!("malformed cache row: {why}"));
        let mut fields = Vec::with_capacity(COLUMNS.len());
        let mut pos = 0;
        for (i, (name, width)) in COLUMNS.iter().enumerate() {
            let end = pos + width;
            let cell = line.get(pos..end).ok_or_else(|| bad(format!("row too short for column {name}")))?;
            fields.push(cell.trim());
            pos = end;
            if i + 1 < COLUMNS.len() {
                if line.get(pos..pos + 1) != Some(" ") {
                    return Err(bad(format!("missing separator after {name}")));
                }
                pos += 1;
            }
        }
        if pos != line.len() {
            return Err(bad("trailing characters".into()));
        }
        let fl = |i: usize| fields[i].parse::<f64>().map_err(|e| bad(format!("{}: {e}", COLUMNS[i].0)));
        let int = |i: usize| fields[i].parse::<usize>().map_err(|e| bad(format!("{}: {e}", COLUMNS[i].0)));
        Ok(Self {
            dim: int(0)?,
            c: fl(1)?,
            sigma: fl(2)?,
            a: fl(3)?,
            r_max: fl(4)?,
            m: int(5)?,
            shoot_amplitude: fl(6)?,
            energy: fl(7)?,
            grad_sq: fl(8)?,
            pohozaev: fl(9)?,
            nehari: fl(10)?,
            iterations: int(11)?,
        })
    }
}

fn header() -> String {
    let names: Vec<String> = COLUMNS.iter().enumerate().map(|(i, (n, w))| if i == 0 { format!("# {:>w$}", n, w = w - 2) } else { format!("{n:>w$}", w = *w) }).collect();
    names.join(" ")
}

/// Reads every row; a missing file is an empty cache.
pub fn read(path: &Path) -> Result<Vec<CacheRow>, CliError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(CliError::Io(format!("{}: {e}", path.display()))),
    };
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(CliError::Domain(format!("{}: not a v1 ground-state cache", path.display())));
    }
    lines.filter(|l| !l.starts_with('#') && !l.trim().is_empty()).map(CacheRow::parse).collect()
}

pub fn lookup(path: &Path, probe: &CacheRow) -> Result<Option<CacheRow>, CliError> {
    let key = probe.key();
    Ok(read(path)?.into_iter().find(|r| r.key() == key))
}

/// Inserts or replaces `row` and rewrites the file.
pub fn store(path: &Path, row: CacheRow) -> Result<(), CliError> {
    let mut rows = read(path)?;
    rows.retain(|r| r.key() != row.key());
    rows.push(row);
    rows.sort_by_key(|r| r.key());
    let mut out = format!("{MAGIC}\n{}\n", header());
    for r in &rows {
        out.push_str(&r.line());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
