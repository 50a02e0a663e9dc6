//! Artifact writers: CSV, the `RLF1` binary dump, SVG polylines and
//! schema-tagged JSON.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interface::InterfaceSolution;
use crate::realline::Grid;

pub const SCHEMA: u64 = 1;
pub const RLF1_MAGIC: &[u8; 4] = b"RLF1";

/// `x, re, im`.
pub fn write_field_csv(path: &Path, grid: &Grid, values: &[Complex64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,re,im")?;
    for (j, z) in values.iter().enumerate() {
        writeln!(w, "{:e},{:e},{:e}", grid.x(j), z.re, z.im)?;
    }
    w.flush()?;
    Ok(())
}

/// `x` followed by named real columns.
pub fn write_columns_csv(path: &Path, grid: &Grid, columns: &[(&str, &[f64])]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let head: Vec<&str> = std::iter::once("x").chain(columns.iter().map(|c| c.0)).collect();
    writeln!(w, "{}", head.join(","))?;
    for j in 0..grid.n {
        write!(w, "{:e}", grid.x(j))?;
        for (_, c) in columns {
            write!(w, ",{:e}", c[j])?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// `x, re_eta, im_eta, f, g`.
pub fn write_eta_csv(path: &Path, ifs: &InterfaceSolution) -> Result<()> {
    let re: Vec<f64> = ifs.eta.iter().map(|z| z.re).collect();
    let im: Vec<f64> = ifs.eta.iter().map(|z| z.im).collect();
    write_columns_csv(
        path,
        &ifs.grid,
        &[("re_eta", &re), ("im_eta", &im), ("f", &ifs.f), ("g", &ifs.g)],
    )
}

/// Little-endian dump: `"RLF1"`, `N: u64`, `L: f64`, `pad_factor: u64`,
/// `ncols: u64`, then each column as `N` f64 values.
pub fn write_rlf1(path: &Path, grid: &Grid, columns: &[&[f64]]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(RLF1_MAGIC)?;
    w.write_all(&(grid.n as u64).to_le_bytes())?;
    w.write_all(&grid.half_width.to_le_bytes())?;
    w.write_all(&(grid.pad_factor as u64).to_le_bytes())?;
    w.write_all(&(columns.len() as u64).to_le_bytes())?;
    for c in columns {
        if c.len() != grid.n {
            return Err(Error::GridMismatch);
        }
        for v in c.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_rlf1(path: &Path) -> Result<(Grid, Vec<Vec<f64>>)> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let bad = || Error::Config(format!("{}: not an RLF1 file", path.display()));
    if bytes.len() < 36 || &bytes[..4] != RLF1_MAGIC {
        return Err(bad());
    }
    let word = |k: usize| -> [u8; 8] { bytes[4 + 8 * k..12 + 8 * k].try_into().unwrap() };
    let n = u64::from_le_bytes(word(0)) as usize;
    let l = f64::from_le_bytes(word(1));
    let pad = u64::from_le_bytes(word(2)) as usize;
    let ncols = u64::from_le_bytes(word(3)) as usize;
    let body = &bytes[36..];
    if body.len() != 8 * n * ncols {
        return Err(bad());
    }
    let grid = Grid::new(l, n, pad)?;
    let cols = (0..ncols)
        .map(|c| {
            (0..n)
                .map(|j| {
                    let o = 8 * (c * n + j);
                    f64::from_le_bytes(body[o..o + 8].try_into().unwrap())
                })
                .collect()
        })
        .collect();
    Ok((grid, cols))
}

/// One polyline per series, equal aspect ratio, no axes beyond a frame.
pub fn write_svg(path: &Path, title: &str, series: &[(String, Vec<(f64, f64)>)]) -> Result<()> {
    const W: f64 = 800.0;
    const H: f64 = 600.0;
    const M: f64 = 40.0;
    let pts = series.iter().flat_map(|s| s.1.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (-1.0, 1.0, -1.0, 1.0);
    }
    let span = ((x1 - x0) / (W - 2.0 * M)).max((y1 - y0) / (H - 2.0 * M)).max(1e-300);
    let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
    let map = |x: f64, y: f64| (W / 2.0 + (x - cx) / span, H / 2.0 - (y - cy) / span);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"];
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    )?;
    writeln!(w, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white" stroke="black"/>"#)?;
    writeln!(w, r#"<text x="{M}" y="25" font-size="14">{}</text>"#, escape(title))?;
    for (k, (label, p)) in series.iter().enumerate() {
        let c = colors[k % colors.len()];
        let path: Vec<String> = p
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| {
                let (u, v) = map(x, y);
                format!("{u:.2},{v:.2}")
            })
            .collect();
        writeln!(
            w,
            r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        )?;
        writeln!(
            w,
            r#"<text x="{}" y="{}" font-size="12" fill="{c}">{}</text>"#,
            W - 160.0,
            50.0 + 16.0 * k as f64,
            escape(label)
        )?;
    }
    writeln!(w, "</svg>")?;
    w.flush()?;
    Ok(())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Serialize with `"schema": 1` as the first key.
pub fn to_json<T: Serialize>(value: &T) -> Result<serde_json::Value> {
    let v = serde_json::to_value(value).map_err(|e| Error::Config(e.to_string()))?;
    let mut map = serde_json::Map::new();
    map.insert("schema".into(), SCHEMA.into());
    match v {
        serde_json::Value::Object(o) => map.extend(o),
        other => {
            map.insert("data".into(), other);
        }
    }
    Ok(serde_json::Value::Object(map))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let v = to_json(value)?;
    let text = serde_json::to_string_pretty(&v).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
