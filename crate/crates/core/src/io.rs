//! CSV file formats: joint ensembles, x-only point clouds, and headerless
//! matrices.
//!
//! Ensemble files carry a `x1,...,xn,y1,...,ym` header, one particle per row,
//! optionally followed by `z1,...,zn` latent columns when a generator kept
//! its latent draws. Values are printed with Rust's shortest round-trip
//! formatting, so `read(write(e))` reproduces every bit. Files are UTF-8
//! with LF line endings. Parse failures name the offending cell (1-based
//! row and column, header included in the row count).

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::generators::JointSample;
use crate::wasserstein::PointCloud;

fn parse_cell(path: &Path, row: usize, col: usize, field: &str) -> Result<f64> {
    let trimmed = field.trim();
    let value: f64 = trimmed.parse().map_err(|_| Error::Parse {
        path: path.display().to_string(),
        row,
        col,
        msg: format!("cannot parse {trimmed:?} as a number"),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse {
            path: path.display().to_string(),
            row,
            col,
            msg: format!("non-finite value {trimmed:?}"),
        });
    }
    Ok(value)
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_string(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Parses a header of the form `x1..xn[,y1..ym[,z1..zn]]`, returning the
/// column counts per prefix in header order.
fn parse_header(path: &Path, line: &str) -> Result<Vec<(char, usize)>> {
    let mut groups: Vec<(char, usize)> = Vec::new();
    for (col, name) in line.split(',').enumerate() {
        let name = name.trim();
        let bad = || Error::Parse {
            path: path.display().to_string(),
            row: 1,
            col: col + 1,
            msg: format!("unexpected header field {name:?}"),
        };
        let mut chars = name.chars();
        let prefix = chars.next().ok_or_else(bad)?;
        if !matches!(prefix, 'x' | 'y' | 'z') {
            return Err(bad());
        }
        let index: usize = chars.as_str().parse().map_err(|_| bad())?;
        match groups.last_mut() {
            Some((p, count)) if *p == prefix => {
                if index != *count + 1 {
                    return Err(bad());
                }
                *count += 1;
            }
            _ => {
                if index != 1 || groups.iter().any(|(p, _)| *p == prefix) {
                    return Err(bad());
                }
                groups.push((prefix, 1));
            }
        }
    }
    Ok(groups)
}

fn parse_rows(path: &Path, lines: &[&str], width: usize) -> Result<DMatrix<f64>> {
    let mut values = Vec::with_capacity(lines.len() * width);
    for (i, line) in lines.iter().enumerate() {
        let row = i + 2; // header is row 1
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(Error::Parse {
                path: path.display().to_string(),
                row,
                col: fields.len().min(width),
                msg: format!("expected {width} fields, got {}", fields.len()),
            });
        }
        for (j, field) in fields.iter().enumerate() {
            values.push(parse_cell(path, row, j + 1, field)?);
        }
    }
    Ok(DMatrix::from_row_slice(lines.len(), width, &values))
}

fn data_lines(contents: &str) -> Vec<&str> {
    contents
        .lines()
        .map(str::trim_end)
        .filter(|l| !l.is_empty())
        .collect()
}

fn format_row(out: &mut String, row: &[f64]) {
    for (j, v) in row.iter().enumerate() {
        if j > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

fn header(groups: &[(char, usize)]) -> String {
    let mut h = String::new();
    for (g, (prefix, count)) in groups.iter().enumerate() {
        for i in 1..=*count {
            if g > 0 || i > 1 {
                h.push(',');
            }
            let _ = write!(h, "{prefix}{i}");
        }
    }
    h.push('\n');
    h
}

/// Writes the `x,y` blocks of an ensemble.
pub fn write_ensemble(e: &Ensemble, path: &Path) -> Result<()> {
    let mut out = header(&[('x', e.state_dim()), ('y', e.obs_dim())]);
    for i in 0..e.len() {
        let row: Vec<f64> = e.data().row(i).iter().copied().collect();
        format_row(&mut out, &row);
    }
    write_string(path, &out)
}

/// Writes an ensemble together with its latent `z` columns.
pub fn write_joint_sample(js: &JointSample, path: &Path) -> Result<()> {
    let e = &js.ensemble;
    let mut out = header(&[('x', e.state_dim()), ('y', e.obs_dim()), ('z', e.state_dim())]);
    for i in 0..e.len() {
        let mut row: Vec<f64> = e.data().row(i).iter().copied().collect();
        row.extend(js.latent.row(i).iter().copied());
        format_row(&mut out, &row);
    }
    write_string(path, &out)
}

/// Reads an ensemble; trailing latent `z` columns, if present, are ignored.
pub fn read_ensemble(path: &Path) -> Result<Ensemble> {
    let (ensemble, _) = read_ensemble_with_latent(path)?;
    Ok(ensemble)
}

/// Reads an ensemble and its latent block when the file carries `z` columns.
pub fn read_ensemble_with_latent(path: &Path) -> Result<(Ensemble, Option<DMatrix<f64>>)> {
    let contents = read_to_string(path)?;
    let lines = data_lines(&contents);
    let parse_err = |msg: &str| Error::Parse {
        path: path.display().to_string(),
        row: 1,
        col: 1,
        msg: msg.to_string(),
    };
    let Some((first, rest)) = lines.split_first() else {
        return Err(parse_err("empty file"));
    };
    let groups = parse_header(path, first)?;
    let (n, m, z) = match groups.as_slice() {
        [('x', n), ('y', m)] => (*n, *m, 0),
        [('x', n), ('y', m), ('z', z)] if z == n => (*n, *m, *z),
        _ => return Err(parse_err("expected header x1..xn,y1..ym with optional z1..zn")),
    };
    if rest.is_empty() {
        return Err(parse_err("ensemble file has a header but no particles"));
    }
    let all = parse_rows(path, rest, n + m + z)?;
    let ensemble = Ensemble::new(n, m, all.columns(0, n + m).into())?;
    let latent = (z > 0).then(|| all.columns(n + m, z).into());
    Ok((ensemble, latent))
}

/// Writes an x-only point cloud (`x1..xd` header).
pub fn write_point_cloud(cloud: &PointCloud, path: &Path) -> Result<()> {
    let mut out = header(&[('x', cloud.dim())]);
    for i in 0..cloud.len() {
        let row: Vec<f64> = cloud.points().row(i).iter().copied().collect();
        format_row(&mut out, &row);
    }
    write_string(path, &out)
}

/// Reads an x-only point cloud.
pub fn read_point_cloud(path: &Path) -> Result<PointCloud> {
    let contents = read_to_string(path)?;
    let lines = data_lines(&contents);
    let parse_err = |msg: &str| Error::Parse {
        path: path.display().to_string(),
        row: 1,
        col: 1,
        msg: msg.to_string(),
    };
    let Some((first, rest)) = lines.split_first() else {
        return Err(parse_err("empty file"));
    };
    let groups = parse_header(path, first)?;
    let [('x', d)] = groups.as_slice() else {
        return Err(parse_err("expected header x1..xd"));
    };
    if rest.is_empty() {
        return Err(parse_err("point-cloud file has a header but no points"));
    }
    let points = parse_rows(path, rest, *d)?;
    PointCloud::new(points)
}

/// Writes a headerless numeric matrix, one row per line.
pub fn write_matrix(m: &DMatrix<f64>, path: &Path) -> Result<()> {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<f64> = m.row(i).iter().copied().collect();
        format_row(&mut out, &row);
    }
    write_string(path, &out)
}

/// Reads a headerless numeric matrix.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let contents = read_to_string(path)?;
    let lines = data_lines(&contents);
    if lines.is_empty() {
        return Err(Error::Parse {
            path: path.display().to_string(),
            row: 1,
            col: 1,
            msg: "empty matrix file".into(),
        });
    }
    let width = lines[0].split(',').count();
    let mut values = Vec::with_capacity(lines.len() * width);
    for (i, line) in lines.iter().enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(Error::Parse {
                path: path.display().to_string(),
                row: i + 1,
                col: fields.len().min(width),
                msg: format!("expected {width} fields, got {}", fields.len()),
            });
        }
        for (j, field) in fields.iter().enumerate() {
            values.push(parse_cell(path, i + 1, j + 1, field)?);
        }
    }
    Ok(DMatrix::from_row_slice(lines.len(), width, &values))
}
