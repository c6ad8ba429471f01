use anyhow::{bail, Context, Result};
use fopid_core::fractional::{bundled_plant, load_plant, FracTransferFunction};
use fopid_core::freq::FopidParams;
use fopid_core::reduction::ReducedModel;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

/// Plant from a definition file, or one of the bundled plants by name.
pub fn read_plant(arg: &str) -> Result<(String, FracTransferFunction)> {
    let path = Path::new(arg);
    if path.is_file() {
        let pf = load_plant(path).with_context(|| format!("invalid plant file {arg}"))?;
        let g = pf.to_fotf()?;
        return Ok((pf.name, g));
    }
    match bundled_plant(arg) {
        Ok(g) => Ok((arg.to_ascii_lowercase(), g)),
        Err(_) => bail!("plant file {arg} not found and not a bundled plant name (p1, p2, p3, p4)"),
    }
}

pub fn read_controller(path: &Path) -> Result<FopidParams> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read controller file {}", path.display()))?;
    let c: FopidParams =
        toml::from_str(&text).with_context(|| format!("invalid controller file {}", path.display()))?;
    c.validate().with_context(|| format!("invalid controller in {}", path.display()))?;
    Ok(c)
}

pub fn read_model(path: &Path) -> Result<ReducedModel> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read model file {}", path.display()))?;
    let m: ReducedModel =
        toml::from_str(&text).with_context(|| format!("invalid model file {}", path.display()))?;
    m.validate().with_context(|| format!("invalid model in {}", path.display()))?;
    Ok(m)
}

/// Output directory, created on the first write.
pub struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn new(root: PathBuf) -> Self {
        Self { root, written: Vec::new() }
    }

    /// Path of `name` inside the directory, creating the directory if needed.
    pub fn file(&mut self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.root)
            .with_context(|| format!("cannot create output directory {}", self.root.display()))?;
        let p = self.root.join(name);
        self.written.push(p.clone());
        Ok(p)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.file(name)?;
        fs::write(&p, text).with_context(|| format!("cannot write {}", p.display()))
    }

    pub fn write_toml<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = toml::to_string_pretty(value)?;
        self.write_text(name, &text)
    }

    pub fn summary(&self) -> String {
        self.written
            .iter()
            .map(|p| format!("wrote {}", p.display()))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Minimal CSV table with a fixed header; cells are written as given.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    /// Column-aligned text for the terminal.
    pub fn to_text(&self) -> String {
        let mut width: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
        for r in &self.rows {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let line = |cells: Vec<&str>| {
            cells
                .iter()
                .zip(&width)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut out = vec![line(self.header.clone())];
        out.extend(self.rows.iter().map(|r| line(r.iter().map(String::as_str).collect())));
        out.join("\n")
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v}"))
}
