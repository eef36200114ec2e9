//! Matrix Market reading and writing.
//!
//! Reads `coordinate` and `array` matrices with `real` or `integer` fields and
//! `general`, `symmetric` or `skew-symmetric` storage. Writes the coordinate
//! general form with 1-based indices.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::SparseMat;

#[derive(Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

/// Upper bound on declared sizes, to reject absurd headers before allocating.
const MAX_DIM: usize = 10_000_000;

struct Tokens<'a> {
    line_no: usize,
    items: Vec<(usize, &'a str)>,
}

fn split_columns(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &line[s..]));
    }
    out
}

fn parse_usize(tok: (usize, &str), line: usize, what: &str) -> Result<usize> {
    tok.1
        .parse::<usize>()
        .map_err(|_| Error::parse(format!("malformed {what} '{}'", tok.1), line, tok.0 + 1))
}

fn parse_f64(tok: (usize, &str), line: usize) -> Result<f64> {
    let v = tok
        .1
        .parse::<f64>()
        .map_err(|_| Error::parse(format!("malformed value '{}'", tok.1), line, tok.0 + 1))?;
    if !v.is_finite() {
        return Err(Error::parse(format!("non-finite value '{}'", tok.1), line, tok.0 + 1));
    }
    Ok(v)
}

pub fn parse_matrix_market(text: &str) -> Result<SparseMat> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse("empty Matrix Market input", 1, 1))?;
    let head: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if head.len() != 5 || head[0] != "%%matrixmarket" || head[1] != "matrix" {
        return Err(Error::parse("missing '%%MatrixMarket matrix' header", hline, 1));
    }
    let coordinate = match head[2].as_str() {
        "coordinate" => true,
        "array" => false,
        f => return Err(Error::parse(format!("unsupported format '{f}'"), hline, 1)),
    };
    match head[3].as_str() {
        "real" | "integer" | "double" => {}
        f => return Err(Error::parse(format!("unsupported field '{f}'"), hline, 1)),
    }
    let sym = match head[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        s => return Err(Error::parse(format!("unsupported symmetry '{s}'"), hline, 1)),
    };

    let mut data = lines.filter_map(|(no, l)| {
        let t = l.trim_start();
        if t.is_empty() || t.starts_with('%') {
            None
        } else {
            Some(Tokens {
                line_no: no,
                items: split_columns(l),
            })
        }
    });

    let size = data
        .next()
        .ok_or_else(|| Error::parse("missing size line", hline + 1, 1))?;
    let want = if coordinate { 3 } else { 2 };
    if size.items.len() != want {
        return Err(Error::parse(
            format!("size line needs {want} integers"),
            size.line_no,
            1,
        ));
    }
    let nrows = parse_usize(size.items[0], size.line_no, "row count")?;
    let ncols = parse_usize(size.items[1], size.line_no, "column count")?;
    if nrows > MAX_DIM || ncols > MAX_DIM {
        return Err(Error::parse("matrix dimensions too large", size.line_no, 1));
    }
    if sym != Symmetry::General && nrows != ncols {
        return Err(Error::parse("symmetric storage requires a square matrix", size.line_no, 1));
    }

    let mut entries = Vec::new();
    let mut push = |i: usize, j: usize, v: f64| {
        entries.push((i, j, v));
        if i != j {
            match sym {
                Symmetry::General => {}
                Symmetry::Symmetric => entries.push((j, i, v)),
                Symmetry::Skew => entries.push((j, i, -v)),
            }
        }
    };

    if coordinate {
        let nnz = parse_usize(size.items[2], size.line_no, "entry count")?;
        let mut seen = 0;
        for t in data {
            if seen == nnz {
                return Err(Error::parse("more entries than declared", t.line_no, 1));
            }
            if t.items.len() != 3 {
                return Err(Error::parse("entry needs row, column and value", t.line_no, 1));
            }
            let i = parse_usize(t.items[0], t.line_no, "row index")?;
            let j = parse_usize(t.items[1], t.line_no, "column index")?;
            if i == 0 || i > nrows {
                return Err(Error::parse(format!("row index {i} out of range"), t.line_no, t.items[0].0 + 1));
            }
            if j == 0 || j > ncols {
                return Err(Error::parse(format!("column index {j} out of range"), t.line_no, t.items[1].0 + 1));
            }
            if sym != Symmetry::General && j > i {
                return Err(Error::parse("entry above the diagonal in symmetric storage", t.line_no, 1));
            }
            if sym == Symmetry::Skew && i == j {
                return Err(Error::parse("diagonal entry in skew-symmetric storage", t.line_no, 1));
            }
            let v = parse_f64(t.items[2], t.line_no)?;
            push(i - 1, j - 1, v);
            seen += 1;
        }
        if seen != nnz {
            return Err(Error::parse(
                format!("expected {nnz} entries, found {seen}"),
                text.lines().count().max(1),
                1,
            ));
        }
    } else {
        // Each value needs at least one byte of input, which bounds the slot list.
        if nrows.saturating_mul(ncols) > text.len() {
            return Err(Error::parse("declared size exceeds the values present", size.line_no, 1));
        }
        // Column-major; symmetric storage lists the lower triangle only.
        let mut slots = Vec::new();
        for j in 0..ncols {
            let first = match sym {
                Symmetry::General => 0,
                Symmetry::Symmetric => j,
                Symmetry::Skew => j + 1,
            };
            for i in first..nrows {
                slots.push((i, j));
            }
        }
        let mut k = 0;
        for t in data {
            for &tok in &t.items {
                if k == slots.len() {
                    return Err(Error::parse("more values than the declared size", t.line_no, tok.0 + 1));
                }
                let v = parse_f64(tok, t.line_no)?;
                let (i, j) = slots[k];
                push(i, j, v);
                k += 1;
            }
        }
        if k != slots.len() {
            return Err(Error::parse(
                format!("expected {} values, found {k}", slots.len()),
                text.lines().count().max(1),
                1,
            ));
        }
    }
    Ok(SparseMat::from_triplets(nrows, ncols, entries))
}

pub fn to_matrix_market(m: &SparseMat) -> String {
    let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", m.nrows(), m.ncols(), m.nnz());
    for (i, j, v) in m.triplets() {
        let _ = writeln!(s, "{} {} {:.16e}", i + 1, j + 1, v);
    }
    s
}

pub fn read_matrix_market(path: &Path) -> Result<SparseMat> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market(&text).map_err(|e| match e {
        Error::Parse { message, location } => Error::Parse {
            message: format!("{}: {message}", path.display()),
            location,
        },
        other => other,
    })
}

pub fn write_matrix_market(path: &Path, m: &SparseMat) -> Result<()> {
    crate::io::write_atomic(path, to_matrix_market(m).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let m = SparseMat::from_dense(&[vec![1.0 / 3.0, 0.0], vec![-2.5e-300, 7.0]]);
        let back = parse_matrix_market(&to_matrix_market(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn symmetric_storage_is_expanded() {
        let t = "%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 2\n1 1 4\n2 1 -1\n";
        let m = parse_matrix_market(t).unwrap();
        assert_eq!(m.get(0, 1), -1.0);
        assert_eq!(m.get(1, 0), -1.0);
    }

    #[test]
    fn skew_and_array_forms() {
        let t = "%%MatrixMarket matrix array real skew-symmetric\n2 2\n3\n";
        let m = parse_matrix_market(t).unwrap();
        assert_eq!(m.to_rows(), vec![vec![0.0, -3.0], vec![3.0, 0.0]]);
        let g = "%%MatrixMarket matrix array real general\n2 1\n1\n2\n";
        assert_eq!(parse_matrix_market(g).unwrap().get(1, 0), 2.0);
    }

    #[test]
    fn errors_carry_positions() {
        let t = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        match parse_matrix_market(t) {
            Err(Error::Parse { location, .. }) => assert_eq!((location.line, location.column), (3, 1)),
            other => panic!("unexpected {other:?}"),
        }
        let t = "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 x\n";
        match parse_matrix_market(t) {
            Err(Error::Parse { location, .. }) => assert_eq!((location.line, location.column), (3, 5)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
