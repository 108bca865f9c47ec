use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::ser::Formatter;
use sha2::{Digest, Sha256};

/// Compact JSON with every float written as `{:.16e}` (17 significant
/// digits), so reports are byte-stable across runs.
struct FixedFloats;

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write!(w, "{:.16e}", v as f64)
    }
}

pub fn to_json<S: Serialize>(value: &S) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats);
    value.serialize(&mut ser).expect("report types serialize");
    String::from_utf8(buf).expect("serde_json writes utf-8")
}

pub fn write(dir: &Path, name: &str, text: &str) -> io::Result<String> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, text)?;
    Ok(path.display().to_string())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
pub struct Tolerances {
    pub ode_rtol: f64,
    pub tol_root: f64,
    pub count_rtol: f64,
}

#[derive(Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub command: String,
    /// SHA-256 of the canonical JSON form of the potential.
    pub potential_sha256: Option<String>,
    pub norm_convention: &'static str,
    pub tolerances: Tolerances,
    pub grid_cells: usize,
    pub grid_nodes: usize,
    pub n: usize,
    pub sigma: f64,
    pub radius: f64,
    pub nu: f64,
    pub seed: u64,
}

#[derive(Serialize)]
pub struct Report<'a, B: Serialize> {
    pub meta: &'a Meta,
    #[serde(flatten)]
    pub body: B,
}
