//! File formats for kernels, signals, continuous specs and circuits.
//!
//! Kernels: a binary container (`PTVKERN\0` magic, little-endian header and
//! taps in row-major `(i, j, p, m)` order) or a JSON document with the same
//! field names. Signals: CSV with a `t,ch0,ch1,...` header, or raw
//! little-endian f64 interleaved by frame plus a `<file>.json` sidecar.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::compose::{Block, Circuit, Node, ReduceOptions};
use crate::continuous::{ContinuousSpec, DEFAULT_TAIL_TOL};
use crate::error::{PtvError, Result};
use crate::kernel::PeriodicKernel;
use crate::signal::Signal;
use crate::spectrum::HybridSpectrum;

pub const KERNEL_MAGIC: &[u8; 8] = b"PTVKERN\0";
pub const KERNEL_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 4 + 8 * 3 + 8 * 2 + 8;

fn is_json_path(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn is_csv_path(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn kernel_to_bytes(k: &PeriodicKernel) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * k.taps().len());
    out.extend_from_slice(KERNEL_MAGIC);
    out.extend_from_slice(&KERNEL_VERSION.to_le_bytes());
    out.extend_from_slice(&u32::from(k.sample_period_s().is_some()).to_le_bytes());
    out.extend_from_slice(&(k.n_out() as u64).to_le_bytes());
    out.extend_from_slice(&(k.n_in() as u64).to_le_bytes());
    out.extend_from_slice(&(k.period() as u64).to_le_bytes());
    out.extend_from_slice(&k.lag_min().to_le_bytes());
    out.extend_from_slice(&k.lag_max().to_le_bytes());
    out.extend_from_slice(&k.sample_period_s().unwrap_or(0.0).to_le_bytes());
    for t in k.taps() {
        out.extend_from_slice(&t.to_le_bytes());
    }
    out
}

pub fn kernel_from_bytes(bytes: &[u8]) -> Result<PeriodicKernel> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != KERNEL_MAGIC {
        return Err(PtvError::Format("not a binary kernel file".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let i64_at = |o: usize| i64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(8);
    if version != KERNEL_VERSION {
        return Err(PtvError::Format(format!("unsupported kernel version {version}")));
    }
    let has_rate = u32_at(12) & 1 == 1;
    let n_out = u64_at(16) as usize;
    let n_in = u64_at(24) as usize;
    let period = u64_at(32) as usize;
    let lag_min = i64_at(40);
    let lag_max = i64_at(48);
    let rate = has_rate.then(|| f64_at(56));
    let body = &bytes[HEADER_LEN..];
    if body.len() % 8 != 0 {
        return Err(PtvError::Format("truncated tap data".into()));
    }
    let taps = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    PeriodicKernel::new(n_out, n_in, period, lag_min, lag_max, taps, rate)
}

/// Writes JSON for `.json` paths and the binary container otherwise.
pub fn write_kernel(path: &Path, k: &PeriodicKernel) -> Result<()> {
    if is_json_path(path) {
        fs::write(path, serde_json::to_string_pretty(k)? + "\n")?;
    } else {
        fs::write(path, kernel_to_bytes(k))?;
    }
    Ok(())
}

/// Reads either kernel format, sniffing the magic bytes.
pub fn read_kernel(path: &Path) -> Result<PeriodicKernel> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(KERNEL_MAGIC) {
        kernel_from_bytes(&bytes)
    } else {
        Ok(serde_json::from_slice(&bytes)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSidecar {
    pub channels: usize,
    pub sample_period_s: f64,
    pub origin_index: i64,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn signal_to_csv(x: &Signal) -> String {
    let mut out = String::from("t");
    for c in 0..x.n_channels() {
        out.push_str(&format!(",ch{c}"));
    }
    out.push('\n');
    for n in 0..x.len() {
        let t = (x.origin_index() + n as i64) as f64 * x.sample_period_s();
        out.push_str(&format!("{t}"));
        for ch in x.channels() {
            out.push_str(&format!(",{}", ch[n]));
        }
        out.push('\n');
    }
    out
}

pub fn signal_from_csv(text: &str) -> Result<Signal> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| PtvError::Format("empty CSV".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"t") {
        return Err(PtvError::Format("CSV header must start with 't'".into()));
    }
    let n_ch = cols.len() - 1;
    let mut times = Vec::new();
    let mut channels = vec![Vec::new(); n_ch];
    for (row, line) in lines.enumerate() {
        let vals = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| PtvError::Format(format!("row {}: {e}", row + 1)))?;
        if vals.len() != n_ch + 1 {
            return Err(PtvError::Format(format!(
                "row {} has {} fields, expected {}",
                row + 1,
                vals.len(),
                n_ch + 1
            )));
        }
        times.push(vals[0]);
        for (c, v) in vals[1..].iter().enumerate() {
            channels[c].push(*v);
        }
    }
    let ts = if times.len() >= 2 {
        (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64
    } else {
        1.0
    };
    let origin = times.first().map_or(0, |t0| (t0 / ts).round() as i64);
    Signal::new(ts, channels, origin)
}

pub fn signal_to_raw(x: &Signal) -> (Vec<u8>, RawSidecar) {
    let mut bytes = Vec::with_capacity(8 * x.len() * x.n_channels());
    for n in 0..x.len() {
        for ch in x.channels() {
            bytes.extend_from_slice(&ch[n].to_le_bytes());
        }
    }
    let meta = RawSidecar {
        channels: x.n_channels(),
        sample_period_s: x.sample_period_s(),
        origin_index: x.origin_index(),
    };
    (bytes, meta)
}

pub fn signal_from_raw(bytes: &[u8], meta: &RawSidecar) -> Result<Signal> {
    if meta.channels == 0 {
        return Err(PtvError::Format("sidecar declares zero channels".into()));
    }
    let frame = 8 * meta.channels;
    if bytes.len() % frame != 0 {
        return Err(PtvError::Format(format!(
            "{} bytes is not a whole number of {}-channel frames",
            bytes.len(),
            meta.channels
        )));
    }
    let mut channels = vec![Vec::with_capacity(bytes.len() / frame); meta.channels];
    for (idx, c) in bytes.chunks_exact(8).enumerate() {
        channels[idx % meta.channels].push(f64::from_le_bytes(c.try_into().unwrap()));
    }
    Signal::new(meta.sample_period_s, channels, meta.origin_index)
}

/// CSV for `.csv` paths, raw + sidecar otherwise.
pub fn write_signal(path: &Path, x: &Signal) -> Result<()> {
    if is_csv_path(path) {
        fs::write(path, signal_to_csv(x))?;
    } else {
        let (bytes, meta) = signal_to_raw(x);
        fs::write(path, bytes)?;
        fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)? + "\n")?;
    }
    Ok(())
}

pub fn read_signal(path: &Path) -> Result<Signal> {
    if is_csv_path(path) {
        signal_from_csv(&fs::read_to_string(path)?)
    } else {
        let meta: RawSidecar = serde_json::from_slice(&fs::read(sidecar_path(path))?)?;
        signal_from_raw(&fs::read(path)?, &meta)
    }
}

pub fn read_spec(path: &Path) -> Result<ContinuousSpec> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

pub fn write_spec(path: &Path, spec: &ContinuousSpec) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(spec)? + "\n")?;
    Ok(())
}

#[derive(Debug, Clone, Deserialize)]
struct CircuitDoc {
    #[serde(default)]
    sample_period_s: Option<f64>,
    #[serde(default)]
    lag_window: Option<(i64, i64)>,
    #[serde(default)]
    tail_tolerance: Option<f64>,
    nodes: Vec<NodeDoc>,
    #[serde(default)]
    edges: Vec<EdgeDoc>,
}

#[derive(Debug, Clone, Deserialize)]
struct NodeDoc {
    id: String,
    kind: String,
    #[serde(default)]
    payload: Option<serde_json::Value>,
    #[serde(default)]
    path: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
struct EdgeDoc {
    from: String,
    to: String,
}

fn resolve_node(doc: NodeDoc, base: &Path) -> Result<Node> {
    let path = doc.path.as_ref().map(|p| base.join(p));
    let payload = |doc: &NodeDoc| -> Result<serde_json::Value> {
        match (&doc.payload, &path) {
            (Some(v), _) => Ok(v.clone()),
            (None, Some(p)) => Ok(serde_json::from_slice(&fs::read(p)?)?),
            (None, None) => Err(PtvError::Format(format!(
                "node '{}' needs a payload or a path",
                doc.id
            ))),
        }
    };
    let block = match doc.kind.as_str() {
        "kernel" => match (&doc.payload, &path) {
            (None, Some(p)) => Block::Kernel(read_kernel(p)?),
            _ => Block::Kernel(serde_json::from_value(payload(&doc)?)?),
        },
        "spec" => Block::Spec(serde_json::from_value(payload(&doc)?)?),
        "fir" => {
            let v = payload(&doc)?;
            if v.is_array() {
                Block::Fir {
                    taps: serde_json::from_value(v)?,
                    lag_min: 0,
                }
            } else {
                #[derive(Deserialize)]
                struct Fir {
                    taps: Vec<f64>,
                    #[serde(default)]
                    lag_min: i64,
                }
                let f: Fir = serde_json::from_value(v)?;
                Block::Fir {
                    taps: f.taps,
                    lag_min: f.lag_min,
                }
            }
        }
        other => {
            return Err(PtvError::Format(format!(
                "node '{}' has unknown kind '{other}'",
                doc.id
            )))
        }
    };
    Ok(Node { id: doc.id, block })
}

/// Parses a circuit document; relative node paths resolve against `base`.
pub fn circuit_from_json(text: &str, base: &Path) -> Result<(Circuit, ReduceOptions)> {
    let doc: CircuitDoc = serde_json::from_str(text)?;
    let opts = ReduceOptions {
        sample_period_s: doc.sample_period_s,
        lag_window: doc.lag_window.unwrap_or((0, 0)),
        tail_tolerance: doc.tail_tolerance.unwrap_or(DEFAULT_TAIL_TOL),
    };
    let nodes = doc
        .nodes
        .into_iter()
        .map(|n| resolve_node(n, base))
        .collect::<Result<Vec<_>>>()?;
    let edges = doc.edges.into_iter().map(|e| (e.from, e.to)).collect();
    Ok((Circuit { nodes, edges }, opts))
}

pub fn read_circuit(path: &Path) -> Result<(Circuit, ReduceOptions)> {
    let base = path.parent().unwrap_or(Path::new("."));
    circuit_from_json(&fs::read_to_string(path)?, base)
}

/// Rows `i,j,k,f,re,im`.
pub fn spectrum_to_csv(spec: &HybridSpectrum) -> String {
    let mut out = String::from("i,j,k,f,re,im\n");
    for (i, j, k, f, re, im) in spec.rows() {
        out.push_str(&format!("{i},{j},{k},{f},{re},{im}\n"));
    }
    out
}

/// Writes `text` to `path`, or stdout when `path` is `-`.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if path.as_os_str() == "-" {
        std::io::stdout().write_all(text.as_bytes())?;
    } else {
        fs::write(path, text)?;
    }
    Ok(())
}
