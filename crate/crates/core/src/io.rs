//! CSV serialization of paths and ensembles.
//!
//! Single paths use the header `t,c1,…,cd` with one row per grid point.
//! Ensembles prepend a `path_id` column. Group paths flatten each matrix
//! row-major under `t,m11,m12,…`.

use std::io::{Read, Write};

use crate::error::Error;
use crate::group_sde::GroupPath;
use crate::lie::{GroupElement, Matrix};
use crate::stoch::{CoordPath, Ensemble, TimeGrid};

/// Failure of the CSV layer, split so callers can tell I/O from format errors.
#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed csv: {0}")]
    Format(String),
}

impl From<csv::Error> for IoError {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => IoError::Io(io),
                other => IoError::Format(format!("{other:?}")),
            }
        } else {
            IoError::Format(e.to_string())
        }
    }
}

impl From<Error> for IoError {
    fn from(e: Error) -> Self {
        IoError::Format(e.to_string())
    }
}

pub type IoResult<T> = std::result::Result<T, IoError>;

fn coord_header(dim: usize) -> Vec<String> {
    (1..=dim).map(|j| format!("c{j}")).collect()
}

/// Writes one path as `t,c1,…`.
pub fn write_path<W: Write>(out: W, path: &CoordPath) -> IoResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(coord_header(path.dim()));
    w.write_record(&header)?;
    for k in 0..path.len() {
        let mut rec = vec![path.grid().time(k).to_string()];
        rec.extend(path.row(k).iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes an ensemble as `path_id,t,c1,…`.
pub fn write_ensemble<W: Write>(out: W, paths: impl IntoIterator<Item = CoordPath>) -> IoResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut wrote_header = false;
    for (id, path) in paths.into_iter().enumerate() {
        if !wrote_header {
            let mut header = vec!["path_id".to_string(), "t".to_string()];
            header.extend(coord_header(path.dim()));
            w.write_record(&header)?;
            wrote_header = true;
        }
        for k in 0..path.len() {
            let mut rec = vec![id.to_string(), path.grid().time(k).to_string()];
            rec.extend(path.row(k).iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_f64(s: &str, line: u64) -> IoResult<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| IoError::Format(format!("line {line}: `{s}` is not a number")))
}

/// Rebuilds the grid from the time column.
fn grid_from_times(times: &[f64]) -> IoResult<TimeGrid> {
    if times.len() < 2 {
        return Err(IoError::Format("a path needs at least two rows".into()));
    }
    let steps = times.len() - 1;
    let dt = (times[steps] - times[0]) / steps as f64;
    let grid = TimeGrid::new(times[0], dt, steps)?;
    for (k, t) in times.iter().enumerate() {
        if (grid.time(k) - t).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(IoError::Format(format!("time column is not uniform at row {}", k + 1)));
        }
    }
    Ok(grid)
}

/// Reads a path written by [`write_path`].
pub fn read_path<R: Read>(input: R) -> IoResult<CoordPath> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.get(0) != Some("t") || headers.len() < 2 {
        return Err(IoError::Format("expected header `t,c1,...`".into()));
    }
    let dim = headers.len() - 1;
    let mut times = Vec::new();
    let mut data = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        times.push(parse_f64(&rec[0], line)?);
        for j in 1..=dim {
            data.push(parse_f64(&rec[j], line)?);
        }
    }
    let grid = grid_from_times(&times)?;
    Ok(CoordPath::new(grid, dim, data)?)
}

/// Reads an ensemble written by [`write_ensemble`]; ids must be `0, 1, …` in order.
pub fn read_ensemble<R: Read>(input: R, base_seed: u64) -> IoResult<Ensemble<CoordPath>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.get(0) != Some("path_id") || headers.get(1) != Some("t") || headers.len() < 3 {
        return Err(IoError::Format("expected header `path_id,t,c1,...`".into()));
    }
    let dim = headers.len() - 2;
    let mut paths = Vec::new();
    let mut current: Option<(usize, Vec<f64>, Vec<f64>)> = None;
    let finish = |(_, times, data): (usize, Vec<f64>, Vec<f64>)| -> IoResult<CoordPath> {
        let grid = grid_from_times(&times)?;
        Ok(CoordPath::new(grid, dim, data)?)
    };
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let id: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| IoError::Format(format!("line {line}: bad path_id `{}`", &rec[0])))?;
        let is_new = current.as_ref().map_or(true, |c| c.0 != id);
        if is_new {
            let expected = paths.len() + usize::from(current.is_some());
            if id != expected {
                return Err(IoError::Format(format!("line {line}: expected path_id {expected}, got {id}")));
            }
            if let Some(c) = current.take() {
                paths.push(finish(c)?);
            }
            current = Some((id, Vec::new(), Vec::new()));
        }
        let c = current.as_mut().expect("current path");
        c.1.push(parse_f64(&rec[1], line)?);
        for j in 2..2 + dim {
            c.2.push(parse_f64(&rec[j], line)?);
        }
    }
    if let Some(c) = current.take() {
        paths.push(finish(c)?);
    }
    if paths.is_empty() {
        return Err(IoError::Format("ensemble file has no rows".into()));
    }
    let grid = *paths[0].grid();
    if paths.iter().any(|p| !p.grid().same_as(&grid)) {
        return Err(IoError::Format("paths do not share one grid".into()));
    }
    Ok(Ensemble::new(paths, base_seed))
}

/// Writes a group path as `t,m11,m12,…`.
pub fn write_group_path<W: Write>(out: W, path: &GroupPath) -> IoResult<()> {
    let m = path.matrix_dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    for i in 1..=m {
        for j in 1..=m {
            header.push(format!("m{i}{j}"));
        }
    }
    w.write_record(&header)?;
    for (k, g) in path.values().iter().enumerate() {
        let mut rec = vec![path.grid().time(k).to_string()];
        for i in 0..m {
            for j in 0..m {
                rec.push(g.matrix()[(i, j)].to_string());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a group path written by [`write_group_path`], checking group membership.
pub fn read_group_path<R: Read>(input: R) -> IoResult<GroupPath> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let entries = headers.len().saturating_sub(1);
    let m = (entries as f64).sqrt().round() as usize;
    if headers.get(0) != Some("t") || m * m != entries || m == 0 {
        return Err(IoError::Format("expected header `t,m11,m12,...` with a square matrix".into()));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        times.push(parse_f64(&rec[0], line)?);
        let flat = (1..=entries).map(|j| parse_f64(&rec[j], line)).collect::<IoResult<Vec<_>>>()?;
        values.push(GroupElement::new_unchecked(Matrix::from_row_slice(m, m, &flat)));
    }
    let grid = grid_from_times(&times)?;
    Ok(GroupPath::new(grid, values)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::e_ij;
    use crate::stoch::sample_bm_path;

    #[test]
    fn path_roundtrip_is_lossless() {
        let g = TimeGrid::with_horizon(0.01, 1.0).unwrap();
        let p = sample_bm_path(3, g, 4, 0).unwrap();
        let mut buf = Vec::new();
        write_path(&mut buf, &p).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,c1,c2,c3\n"));
        let back = read_path(buf.as_slice()).unwrap();
        assert_eq!(back.data(), p.data());
        assert_eq!(back.grid().steps, g.steps);
    }

    #[test]
    fn ensemble_roundtrip() {
        let g = TimeGrid::with_horizon(0.1, 1.0).unwrap();
        let paths: Vec<_> = (0..4).map(|i| sample_bm_path(2, g, 9, i).unwrap()).collect();
        let mut buf = Vec::new();
        write_ensemble(&mut buf, paths.clone()).unwrap();
        let e = read_ensemble(buf.as_slice(), 9).unwrap();
        assert_eq!(e.paths, paths);
    }

    #[test]
    fn ensemble_rejects_out_of_order_ids() {
        let text = "path_id,t,c1\n0,0,0\n0,1,1\n2,0,0\n2,1,1\n";
        assert!(matches!(read_ensemble(text.as_bytes(), 0), Err(IoError::Format(_))));
    }

    #[test]
    fn malformed_numbers_are_format_errors() {
        let text = "t,c1\n0,0\n0.5,abc\n";
        assert!(matches!(read_path(text.as_bytes()), Err(IoError::Format(msg)) if msg.contains("line 3")));
    }

    #[test]
    fn group_path_roundtrip() {
        let g = TimeGrid::new(0.0, 0.1, 5).unwrap();
        let y = GroupPath::one_parameter(g, &GroupElement::identity(3), &e_ij(3, 0, 1));
        let mut buf = Vec::new();
        write_group_path(&mut buf, &y).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,m11,m12,m13,m21,"));
        let back = read_group_path(buf.as_slice()).unwrap();
        assert_eq!(back, y);
    }
}
