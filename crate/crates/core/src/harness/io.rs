//! Plain-text and raw binary exports.
//!
//! Raw grids are little-endian `f64`: an 8-value header followed by the
//! values in storage order. Sinogram header:
//! `[0, n_alpha, n_rho, rho_min, rho_max, 0, 0, 0]`. Image header:
//! `[1, n, x_lo, x_hi, y_lo, y_hi, 0, 0]`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::HarnessError;
use crate::data::{DataGrid, Sinogram};
use crate::operators::{Image, ImageGrid};

const HEADER_LEN: usize = 8;

fn write_raw(path: &Path, header: [f64; HEADER_LEN], values: &[f64]) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for v in header.iter().chain(values) {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_raw(path: &Path) -> Result<(Vec<f64>, Vec<f64>), HarnessError> {
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 || bytes.len() < HEADER_LEN * 8 {
        return Err(HarnessError::Format(format!("{}: truncated raw grid", path.display())));
    }
    let all: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let (head, values) = all.split_at(HEADER_LEN);
    Ok((head.to_vec(), values.to_vec()))
}

pub fn write_sinogram_raw(path: &Path, s: &Sinogram) -> Result<(), HarnessError> {
    let g = s.grid;
    write_raw(path, [0.0, g.n_alpha as f64, g.n_rho as f64, g.rho_min, g.rho_max, 0.0, 0.0, 0.0], &s.values)
}

pub fn read_sinogram_raw(path: &Path) -> Result<Sinogram, HarnessError> {
    let (h, values) = read_raw(path)?;
    if h[0] != 0.0 {
        return Err(HarnessError::Format(format!("{}: not a sinogram", path.display())));
    }
    let grid = DataGrid::with_range(h[1] as usize, h[2] as usize, h[3], h[4])?;
    Ok(Sinogram::from_values(grid, values)?)
}

pub fn write_image_raw(path: &Path, img: &Image) -> Result<(), HarnessError> {
    let g = img.grid;
    write_raw(path, [1.0, g.n as f64, g.x_lo, g.x_hi, g.y_lo, g.y_hi, 0.0, 0.0], &img.values)
}

pub fn read_image_raw(path: &Path) -> Result<Image, HarnessError> {
    let (h, values) = read_raw(path)?;
    if h[0] != 1.0 {
        return Err(HarnessError::Format(format!("{}: not an image", path.display())));
    }
    let grid = ImageGrid::new(h[2], h[3], h[4], h[5], h[1] as usize)?;
    Ok(Image::from_values(grid, values)?)
}

/// Header line `n_alpha,n_rho,rho_min,rho_max`, its values, then one row
/// of `n_rho` values per `alpha`.
pub fn sinogram_csv(s: &Sinogram) -> String {
    let g = s.grid;
    let mut out = format!("n_alpha,n_rho,rho_min,rho_max\n{},{},{:e},{:e}\n", g.n_alpha, g.n_rho, g.rho_min, g.rho_max);
    for j1 in 0..g.n_alpha {
        push_row(&mut out, s.row(j1));
    }
    out
}

pub fn parse_sinogram_csv(text: &str) -> Result<Sinogram, HarnessError> {
    let mut lines = text.lines();
    let bad = || HarnessError::Format("malformed sinogram CSV".into());
    if lines.next().map(str::trim) != Some("n_alpha,n_rho,rho_min,rho_max") {
        return Err(bad());
    }
    let head = parse_row(lines.next().ok_or_else(bad)?)?;
    if head.len() != 4 {
        return Err(bad());
    }
    let grid = DataGrid::with_range(head[0] as usize, head[1] as usize, head[2], head[3])?;
    let mut values = Vec::with_capacity(grid.len());
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let row = parse_row(line)?;
        if row.len() != grid.n_rho {
            return Err(bad());
        }
        values.extend(row);
    }
    Ok(Sinogram::from_values(grid, values)?)
}

/// Header line `n,x_lo,x_hi,y_lo,y_hi`, its values, then one row per `x2`
/// index.
pub fn image_csv(img: &Image) -> String {
    let g = img.grid;
    let mut out = format!("n,x_lo,x_hi,y_lo,y_hi\n{},{:e},{:e},{:e},{:e}\n", g.n, g.x_lo, g.x_hi, g.y_lo, g.y_hi);
    for k in 0..g.n {
        push_row(&mut out, &img.values[k * g.n..(k + 1) * g.n]);
    }
    out
}

pub fn parse_image_csv(text: &str) -> Result<Image, HarnessError> {
    let mut lines = text.lines();
    let bad = || HarnessError::Format("malformed image CSV".into());
    if lines.next().map(str::trim) != Some("n,x_lo,x_hi,y_lo,y_hi") {
        return Err(bad());
    }
    let head = parse_row(lines.next().ok_or_else(bad)?)?;
    if head.len() != 5 {
        return Err(bad());
    }
    let grid = ImageGrid::new(head[1], head[2], head[3], head[4], head[0] as usize)?;
    let values: Vec<f64> = lines.filter(|l| !l.trim().is_empty()).map(parse_row).collect::<Result<Vec<_>, _>>()?.concat();
    Ok(Image::from_values(grid, values)?)
}

/// CSV with a header and equally long columns.
pub fn columns_csv(names: &[&str], cols: &[&[f64]]) -> Result<String, HarnessError> {
    let n = cols.first().map_or(0, |c| c.len());
    if names.len() != cols.len() || cols.iter().any(|c| c.len() != n) {
        return Err(HarnessError::Format("column names and lengths disagree".into()));
    }
    let mut out = names.join(",");
    out.push('\n');
    for i in 0..n {
        let row: Vec<f64> = cols.iter().map(|c| c[i]).collect();
        push_row(&mut out, &row);
    }
    Ok(out)
}

fn push_row(out: &mut String, row: &[f64]) {
    let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
    out.push_str(&cells.join(","));
    out.push('\n');
}

fn parse_row(line: &str) -> Result<Vec<f64>, HarnessError> {
    line.split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| HarnessError::Format(format!("{c:?}: {e}"))))
        .collect()
}
