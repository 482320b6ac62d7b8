//! Plain-text CSV formats for curves and kernel surfaces.
//!
//! Curves: a header row of grid nodes `t_1,…,t_m`, then one curve per row.
//! Surfaces: a header `s,t_1,…,t_m`, then rows `s_i,β(s_i,t_1),…,β(s_i,t_m)`.
//! Lines starting with `#` are comments. Numbers are written in the shortest
//! form that parses back to the same `f64`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fdata::{FunctionalSample, Grid};

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, column, message: message.into() }
}

fn cell(value: &str, line: usize, column: usize) -> Result<f64> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(parse_error(line, column, format!("non-finite value '{value}'"))),
        Err(_) => Err(parse_error(line, column, format!("non-numeric cell '{value}'"))),
    }
}

/// Rows of a CSV file with their 1-based line numbers.
fn records<R: Read>(input: R) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut rdr = reader(input);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(line, 0, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        out.push((line, rec));
    }
    Ok(out)
}

fn sorted_nodes(nodes: &[f64], line: usize, offset: usize) -> Result<()> {
    if let Some(i) = nodes.windows(2).position(|w| w[1] <= w[0]) {
        return Err(parse_error(
            line,
            i + 2 + offset,
            format!("header nodes must be strictly increasing ({} follows {})", nodes[i + 1], nodes[i]),
        ));
    }
    Ok(())
}

fn numeric_row(rec: &csv::StringRecord, line: usize, width: usize, skip: usize) -> Result<Vec<f64>> {
    if rec.len() != width {
        return Err(parse_error(line, rec.len().min(width) + 1, format!("expected {width} cells, found {}", rec.len())));
    }
    rec.iter().enumerate().skip(skip).map(|(j, v)| cell(v, line, j + 1)).collect()
}

/// Reads curves from CSV. `endpoints` defaults to the outer header nodes.
pub fn read_curves<R: Read>(input: R, endpoints: Option<(f64, f64)>) -> Result<FunctionalSample> {
    let rows = records(input)?;
    let Some(((hline, header), body)) = rows.split_first() else {
        return Err(parse_error(0, 0, "empty input: expected a header row of grid nodes"));
    };
    let nodes: Vec<f64> = header.iter().enumerate().map(|(j, v)| cell(v, *hline, j + 1)).collect::<Result<_>>()?;
    if nodes.len() < 2 {
        return Err(parse_error(*hline, 1, "header needs at least 2 grid nodes"));
    }
    sorted_nodes(&nodes, *hline, 0)?;
    if body.is_empty() {
        return Err(parse_error(*hline, 0, "no curves after the header"));
    }
    let m = nodes.len();
    let mut values = DMatrix::zeros(body.len(), m);
    for (i, (line, rec)) in body.iter().enumerate() {
        let row = numeric_row(rec, *line, m, 0)?;
        values.row_mut(i).copy_from_slice(&row);
    }
    let (lower, upper) = endpoints.unwrap_or((nodes[0], nodes[m - 1]));
    let grid = Grid::from_nodes(nodes, lower, upper)?;
    FunctionalSample::new(grid, values)
}

pub fn read_curves_str(text: &str, endpoints: Option<(f64, f64)>) -> Result<FunctionalSample> {
    read_curves(text.as_bytes(), endpoints)
}

pub fn read_curves_path(path: impl AsRef<Path>, endpoints: Option<(f64, f64)>) -> Result<FunctionalSample> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
    read_curves(file, endpoints).map_err(|e| e.context(path.display().to_string()))
}

fn write_comments<W: Write>(out: &mut W, comments: &[(String, String)]) -> std::io::Result<()> {
    for (k, v) in comments {
        writeln!(out, "# {k}={v}")?;
    }
    Ok(())
}

fn join(values: impl Iterator<Item = f64>) -> String {
    values.map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Writes curves in the format read by [`read_curves`], preceded by
/// `# key=value` comment lines.
pub fn write_curves<W: Write>(out: W, sample: &FunctionalSample, comments: &[(String, String)]) -> Result<()> {
    let mut out = BufWriter::new(out);
    let io = |e: std::io::Error| Error::invalid(format!("write failed: {e}"));
    write_comments(&mut out, comments).map_err(io)?;
    writeln!(out, "{}", join(sample.grid().nodes().iter().copied())).map_err(io)?;
    for row in sample.values().row_iter() {
        writeln!(out, "{}", join(row.iter().copied())).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Kernel values `values[(i, j)] = β(s_i, t_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub values: DMatrix<f64>,
}

impl Surface {
    pub fn new(s: Vec<f64>, t: Vec<f64>, values: DMatrix<f64>) -> Result<Surface> {
        if values.nrows() != s.len() || values.ncols() != t.len() {
            return Err(Error::dims(format!(
                "surface is {}x{} but the axes have {} and {} nodes",
                values.nrows(),
                values.ncols(),
                s.len(),
                t.len()
            )));
        }
        Ok(Surface { s, t, values })
    }

    /// Bilinear resampling onto the nodes of two grids (clamped at the edges).
    pub fn resample(&self, grid_s: &Grid, grid_t: &Grid) -> Result<DMatrix<f64>> {
        if self.s.len() < 2 || self.t.len() < 2 {
            return Err(Error::invalid("surface needs at least 2 nodes per axis"));
        }
        let gs = Grid::from_nodes(self.s.clone(), self.s[0], self.s[self.s.len() - 1])?;
        let gt = Grid::from_nodes(self.t.clone(), self.t[0], self.t[self.t.len() - 1])?;
        let along_t: Vec<Vec<f64>> = (0..self.s.len())
            .map(|i| {
                let row: Vec<f64> = self.values.row(i).iter().copied().collect();
                grid_t.nodes().iter().map(|&t| gt.interpolate(&row, t)).collect()
            })
            .collect();
        Ok(DMatrix::from_fn(grid_s.len(), grid_t.len(), |a, b| {
            let col: Vec<f64> = along_t.iter().map(|r| r[b]).collect();
            gs.interpolate(&col, grid_s.nodes()[a])
        }))
    }
}

pub fn read_surface<R: Read>(input: R) -> Result<Surface> {
    let rows = records(input)?;
    let Some(((hline, header), body)) = rows.split_first() else {
        return Err(parse_error(0, 0, "empty input: expected a header row 's,t_1,...,t_m'"));
    };
    if header.len() < 2 {
        return Err(parse_error(*hline, 1, "header needs a label and at least one t node"));
    }
    let t: Vec<f64> = header.iter().enumerate().skip(1).map(|(j, v)| cell(v, *hline, j + 1)).collect::<Result<_>>()?;
    sorted_nodes(&t, *hline, 1)?;
    if body.is_empty() {
        return Err(parse_error(*hline, 0, "no surface rows after the header"));
    }
    let width = t.len() + 1;
    let mut s = Vec::with_capacity(body.len());
    let mut values = DMatrix::zeros(body.len(), t.len());
    for (i, (line, rec)) in body.iter().enumerate() {
        let row = numeric_row(rec, *line, width, 0)?;
        if let Some(&prev) = s.last() {
            if row[0] <= prev {
                return Err(parse_error(*line, 1, format!("s nodes must be strictly increasing ({} follows {prev})", row[0])));
            }
        }
        s.push(row[0]);
        values.row_mut(i).copy_from_slice(&row[1..]);
    }
    Surface::new(s, t, values)
}

pub fn read_surface_str(text: &str) -> Result<Surface> {
    read_surface(text.as_bytes())
}

pub fn read_surface_path(path: impl AsRef<Path>) -> Result<Surface> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
    read_surface(file).map_err(|e| e.context(path.display().to_string()))
}

pub fn write_surface<W: Write>(out: W, surface: &Surface, comments: &[(String, String)]) -> Result<()> {
    let mut out = BufWriter::new(out);
    let io = |e: std::io::Error| Error::invalid(format!("write failed: {e}"));
    write_comments(&mut out, comments).map_err(io)?;
    writeln!(out, "s,{}", join(surface.t.iter().copied())).map_err(io)?;
    for (i, s) in surface.s.iter().enumerate() {
        writeln!(out, "{s},{}", join(surface.values.row(i).iter().copied())).map_err(io)?;
    }
    out.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse_at(err: Error) -> (usize, usize) {
        match err {
            Error::Parse { line, column, .. } => (line, column),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn reads_with_comments_and_inferred_endpoints() {
        let s = read_curves_str("# source=test\n0,0.5,1\n1,2,3\n\n4,5,6\n", None).unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.grid().lower(), 0.0);
        assert_eq!(s.grid().upper(), 1.0);
        assert_eq!(s.curve(1), vec![4.0, 5.0, 6.0]);
        let wide = read_curves_str("0.1,0.9\n1,1\n", Some((0.0, 1.0))).unwrap();
        assert!((wide.grid().weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn malformed_curves_report_positions() {
        assert_eq!(parse_at(read_curves_str("0,1,2\n1,x,3\n", None).unwrap_err()), (2, 2));
        assert_eq!(parse_at(read_curves_str("0,1,2\n1,2,3\n1,2\n", None).unwrap_err()), (3, 3));
        assert_eq!(parse_at(read_curves_str("0,2,1\n1,2,3\n", None).unwrap_err()), (1, 3));
        assert_eq!(parse_at(read_curves_str("0,1,nan\n", None).unwrap_err()), (1, 3));
        assert!(matches!(read_curves_str("", None), Err(Error::Parse { .. })));
        assert!(matches!(read_curves_str("0,1\n", None), Err(Error::Parse { .. })));
        assert!(read_curves_str("0,1\n1,2\n", Some((0.5, 1.0))).is_err());
    }

    #[test]
    fn surface_round_trip_and_resample() {
        let surf = Surface::new(vec![0.0, 1.0], vec![2.0, 3.0, 4.0], DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 3.0, 4.0, 5.0])).unwrap();
        let mut buf = Vec::new();
        write_surface(&mut buf, &surf, &[("k".into(), "v".into())]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# k=v\ns,2,3,4\n"));
        assert_eq!(read_surface_str(&text).unwrap(), surf);
        let gs = Grid::equispaced(0.0, 1.0, 3).unwrap();
        let gt = Grid::equispaced(2.0, 4.0, 5).unwrap();
        let r = surf.resample(&gs, &gt).unwrap();
        // bilinear in a plane: β(s, t) = 2s + t − 1
        for a in 0..3 {
            for b in 0..5 {
                let expect = 2.0 * gs.nodes()[a] + gt.nodes()[b] - 1.0;
                assert!((r[(a, b)] - expect).abs() < 1e-14);
            }
        }
        assert_eq!(parse_at(read_surface_str("s,1,2\n0,1,2\n0,3,4\n").unwrap_err()), (3, 1));
        assert_eq!(parse_at(read_surface_str("s,1,2\n0,1\n").unwrap_err()), (2, 3));
    }

    proptest! {
        #[test]
        fn curves_round_trip_losslessly(
            n in 1usize..6,
            m in 2usize..8,
            seed in proptest::collection::vec(-1e300f64..1e300, 48),
            scale in prop_oneof![Just(1.0), Just(1e-300), Just(1e-7), Just(1.0 / 3.0)],
        ) {
            let grid = Grid::equispaced(0.0, 1.0, m).unwrap();
            let sample = FunctionalSample::from_fn(grid, n, |i, t| seed[(i * 8 + (t * 7.0) as usize) % 48] * scale).unwrap();
            let mut buf = Vec::new();
            write_curves(&mut buf, &sample, &[]).unwrap();
            let back = read_curves(buf.as_slice(), None).unwrap();
            prop_assert_eq!(back.values(), sample.values());
            prop_assert_eq!(back.grid().nodes(), sample.grid().nodes());
        }
    }
}
