//! Output files and the digest manifest.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! rerun of the same config reproduces every byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use plap_core::grid::{Grid, GridFunction};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.txt";

/// Files collected in memory, written in insertion order.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub dir: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn render(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let _ = writeln!(s, "{}  {}  {}", e.sha256, e.bytes, e.name);
        }
        s
    }
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    /// Writes every file plus `manifest.txt` (sorted by name).
    pub fn write(&self, dir: &Path) -> CliResult<Manifest> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut entries = Vec::with_capacity(self.files.len());
        for (name, contents) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, contents).map_err(|source| CliError::Write { path, source })?;
            entries.push(ManifestEntry {
                name: name.clone(),
                sha256: hex(&Sha256::digest(contents.as_bytes())),
                bytes: contents.len(),
            });
        }
        entries.sort_by(|a, b| a.name.cmp(&b.name));
        let manifest = Manifest {
            dir: dir.to_path_buf(),
            entries,
        };
        let path = dir.join(MANIFEST);
        std::fs::write(&path, manifest.render()).map_err(|source| CliError::Write { path, source })?;
        Ok(manifest)
    }
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(2 * bytes.len());
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Shortest round-trip digits, in exponent form outside `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

/// A value rendered into a CSV cell or summary line.
pub trait Cell {
    fn render(&self) -> String;
}

impl Cell for f64 {
    fn render(&self) -> String {
        num(*self)
    }
}

impl Cell for Option<f64> {
    fn render(&self) -> String {
        self.map_or_else(String::new, num)
    }
}

impl Cell for Option<bool> {
    fn render(&self) -> String {
        self.map_or_else(|| "n/a".to_string(), |b| b.to_string())
    }
}

macro_rules! display_cell {
    ($($t:ty),*) => {
        $(impl Cell for $t {
            fn render(&self) -> String {
                self.to_string()
            }
        })*
    };
}

display_cell!(usize, u32, i32, bool, str, String);

impl<T: Cell + ?Sized> Cell for &T {
    fn render(&self) -> String {
        (**self).render()
    }
}

/// Optional float as a CSV cell.
pub fn cell(v: Option<f64>) -> String {
    v.render()
}

/// Space-separated list.
pub fn join<T: Cell>(items: impl Iterator<Item = T>) -> String {
    items.map(|x| x.render()).collect::<Vec<_>>().join(" ")
}

/// `node_index, <coordinates>, dist_boundary, value`.
pub fn field_csv(grid: &Grid, field: &GridFunction) -> String {
    let names = grid.coordinate_names();
    let mut s = String::from("node_index,");
    for n in names {
        s.push_str(n);
        s.push(',');
    }
    s.push_str("dist_boundary,value\n");
    for (i, v) in field.values().iter().enumerate() {
        let node = grid.node(i);
        let _ = write!(s, "{i},");
        for c in node.iter().take(names.len()) {
            let _ = write!(s, "{},", num(*c));
        }
        let _ = writeln!(s, "{},{}", num(grid.boundary_distance(i)), num(*v));
    }
    s
}

/// `key = value` lines.
#[derive(Debug, Default)]
pub struct Summary {
    text: String,
}

impl Summary {
    pub fn new(title: &str) -> Self {
        Self {
            text: format!("# {title}\n"),
        }
    }

    pub fn kv(&mut self, key: &str, value: impl Cell) -> &mut Self {
        let _ = writeln!(self.text, "{key} = {}", value.render());
        self
    }

    pub fn section(&mut self, name: &str) -> &mut Self {
        let _ = writeln!(self.text, "\n[{name}]");
        self
    }

    pub fn finish(self) -> String {
        self.text
    }
}
