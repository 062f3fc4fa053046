//! Field files. See `docs/formats.md` for the byte layout.
//!
//! Text: a header line `wavecone-field 1`, then `kind grid|atomic`, `d <d>`,
//! `m <m>`, `n <N>` (grid) or `count <K>` (atomic), then one payload line per
//! cell (m values) or atom (d coordinates then m weights). `#` starts a
//! comment line.
//!
//! Binary (little-endian): magic `WCFB`, u32 version 1, u8 kind (0 grid,
//! 1 atomic), u32 d, u32 m, u64 N or K, then f64 payload in the same order.

use std::io::{Read, Write};
use std::path::Path;

use super::{DiscreteMeasure, MeasureData};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"WCFB";
const TEXT_HEADER: &str = "wavecone-field 1";

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::invalid(format!("field file: {}", msg.into()))
}

pub fn write_field_text<W: Write>(mu: &DiscreteMeasure, mut w: W) -> Result<()> {
    writeln!(w, "{TEXT_HEADER}")?;
    match mu.data() {
        MeasureData::Grid { n, values } => {
            writeln!(w, "kind grid\nd {}\nm {}\nn {n}", mu.d(), mu.m())?;
            for cell in values.chunks(mu.m()) {
                writeln!(w, "{}", join(cell))?;
            }
        }
        MeasureData::Atomic { positions, weights } => {
            writeln!(w, "kind atomic\nd {}\nm {}\ncount {}", mu.d(), mu.m(), positions.len())?;
            for (p, q) in positions.iter().zip(weights) {
                writeln!(w, "{} {}", join(p), join(q))?;
            }
        }
    }
    Ok(())
}

/// Shortest round-trip representation of each value.
fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

pub fn read_field_text(src: &str) -> Result<DiscreteMeasure> {
    let mut lines = src
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    if lines.next() != Some(TEXT_HEADER) {
        return Err(fmt_err(format!("expected header '{TEXT_HEADER}'")));
    }
    let mut field = |key: &str| -> Result<String> {
        let line = lines.next().ok_or_else(|| fmt_err(format!("missing '{key}' line")))?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.trim().to_string()),
            _ => Err(fmt_err(format!("expected '{key} <value>', got '{line}'"))),
        }
    };
    let kind = field("kind")?;
    let num = |s: String, key: &str| s.parse::<usize>().map_err(|_| fmt_err(format!("bad {key}")));
    let d = num(field("d")?, "d")?;
    let m = num(field("m")?, "m")?;
    let size_key = if kind == "grid" { "n" } else { "count" };
    let size = num(field(size_key)?, size_key)?;
    let mut rows = Vec::new();
    for line in lines {
        let row: std::result::Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
        rows.push(row.map_err(|_| fmt_err(format!("bad number in '{line}'")))?);
    }
    match kind.as_str() {
        "grid" => {
            let cells = size.checked_pow(d as u32).ok_or_else(|| fmt_err("grid too large"))?;
            if rows.len() != cells || rows.iter().any(|r| r.len() != m) {
                return Err(fmt_err(format!("expected {cells} rows of {m} values")));
            }
            DiscreteMeasure::grid(d, m, size, rows.concat())
        }
        "atomic" => {
            if rows.len() != size || rows.iter().any(|r| r.len() != d + m) {
                return Err(fmt_err(format!("expected {size} rows of {} values", d + m)));
            }
            let (p, w) = rows.into_iter().map(|r| (r[..d].to_vec(), r[d..].to_vec())).unzip();
            DiscreteMeasure::atomic(d, m, p, w)
        }
        other => Err(fmt_err(format!("unknown kind '{other}'"))),
    }
}

pub fn write_field_binary<W: Write>(mu: &DiscreteMeasure, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&1u32.to_le_bytes())?;
    let (kind, size) = match mu.data() {
        MeasureData::Grid { n, .. } => (0u8, *n),
        MeasureData::Atomic { positions, .. } => (1u8, positions.len()),
    };
    w.write_all(&[kind])?;
    w.write_all(&(mu.d() as u32).to_le_bytes())?;
    w.write_all(&(mu.m() as u32).to_le_bytes())?;
    w.write_all(&(size as u64).to_le_bytes())?;
    let mut put = |x: f64| w.write_all(&x.to_le_bytes());
    match mu.data() {
        MeasureData::Grid { values, .. } => values.iter().try_for_each(|&x| put(x))?,
        MeasureData::Atomic { positions, weights } => {
            for (p, q) in positions.iter().zip(weights) {
                p.iter().chain(q).try_for_each(|&x| put(x))?;
            }
        }
    }
    Ok(())
}

pub fn read_field_binary<R: Read>(mut r: R) -> Result<DiscreteMeasure> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    let header = 4 + 4 + 1 + 4 + 4 + 8;
    if buf.len() < header || &buf[..4] != MAGIC {
        return Err(fmt_err("bad magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(buf[o..o + 4].try_into().unwrap());
    if u32_at(4) != 1 {
        return Err(fmt_err("unsupported version"));
    }
    let kind = buf[8];
    let d = u32_at(9) as usize;
    let m = u32_at(13) as usize;
    let size = u64::from_le_bytes(buf[17..25].try_into().unwrap()) as usize;
    let payload: Vec<f64> = buf[header..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if (buf.len() - header) % 8 != 0 {
        return Err(fmt_err("truncated payload"));
    }
    match kind {
        0 => {
            let cells = size.checked_pow(d as u32).ok_or_else(|| fmt_err("grid too large"))?;
            if payload.len() != cells * m {
                return Err(fmt_err("payload length does not match header"));
            }
            DiscreteMeasure::grid(d, m, size, payload)
        }
        1 => {
            if payload.len() != size * (d + m) {
                return Err(fmt_err("payload length does not match header"));
            }
            let (p, w) = payload
                .chunks(d + m)
                .map(|r| (r[..d].to_vec(), r[d..].to_vec()))
                .unzip();
            DiscreteMeasure::atomic(d, m, p, w)
        }
        _ => Err(fmt_err("unknown kind byte")),
    }
}

/// Read a field file, detecting the binary magic.
pub fn read_field(path: &Path) -> Result<DiscreteMeasure> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        read_field_binary(&bytes[..])
    } else {
        let text = String::from_utf8(bytes).map_err(|_| fmt_err("neither binary nor UTF-8 text"))?;
        read_field_text(&text)
    }
}
