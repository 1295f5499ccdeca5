//! Matrix Market coordinate format (real or integer; general or symmetric).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::ProblemError;
use crate::kernels::CsrMatrix;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

fn io_err(path: &Path, source: std::io::Error) -> ProblemError {
    ProblemError::Io { path: path.display().to_string(), source }
}

pub fn read_matrix_market(path: &Path) -> Result<CsrMatrix, ProblemError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    parse_matrix_market(BufReader::new(file))
}

/// Parses a square coordinate matrix; symmetric storage is expanded.
pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<CsrMatrix, ProblemError> {
    let mut lines = reader.lines().enumerate();
    let parse_err = |line: usize, message: String| ProblemError::Parse { line: line + 1, message };

    let (hline, header) = match lines.next() {
        Some((i, l)) => (i, l.map_err(|e| parse_err(i, e.to_string()))?),
        None => return Err(parse_err(0, "empty file".into())),
    };
    let fields: Vec<String> = header.split_whitespace().map(|f| f.to_ascii_lowercase()).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(parse_err(hline, format!("malformed header '{header}'")));
    }
    match fields[2].as_str() {
        "coordinate" => {}
        "array" => return Err(ProblemError::UnsupportedFormat("array storage".into())),
        other => return Err(parse_err(hline, format!("unknown storage '{other}'"))),
    }
    match fields[3].as_str() {
        "real" | "integer" | "double" => {}
        "complex" | "pattern" => return Err(ProblemError::UnsupportedFormat(format!("{} field", fields[3]))),
        other => return Err(parse_err(hline, format!("unknown field '{other}'"))),
    }
    let symmetry = match fields[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" | "hermitian" => {
            return Err(ProblemError::UnsupportedFormat(format!("{} symmetry", fields[4])))
        }
        other => return Err(parse_err(hline, format!("unknown symmetry '{other}'"))),
    };

    let mut size: Option<(usize, usize)> = None;
    let mut trip = Vec::new();
    let mut expected = 0usize;
    let mut seen = 0usize;
    for (i, line) in lines {
        let line = line.map_err(|e| parse_err(i, e.to_string()))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let tok: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if tok.len() != 3 {
                    return Err(parse_err(i, "size line must have three entries".into()));
                }
                let nums: Result<Vec<usize>, _> = tok.iter().map(|x| x.parse::<usize>()).collect();
                let nums = nums.map_err(|e| parse_err(i, format!("bad size line: {e}")))?;
                if nums[0] != nums[1] {
                    return Err(parse_err(i, format!("matrix is {}x{}, expected square", nums[0], nums[1])));
                }
                size = Some((nums[0], nums[1]));
                expected = nums[2];
                trip.reserve(expected * if symmetry == Symmetry::Symmetric { 2 } else { 1 });
            }
            Some((n, _)) => {
                if tok.len() != 3 {
                    return Err(parse_err(i, "entry line must have three entries".into()));
                }
                let r: usize = tok[0].parse().map_err(|e| parse_err(i, format!("bad row index: {e}")))?;
                let c: usize = tok[1].parse().map_err(|e| parse_err(i, format!("bad column index: {e}")))?;
                let v: f64 = tok[2].parse().map_err(|e| parse_err(i, format!("bad value: {e}")))?;
                if r == 0 || c == 0 || r > n || c > n {
                    return Err(parse_err(i, format!("index ({r}, {c}) out of range")));
                }
                trip.push((r - 1, c - 1, v));
                if symmetry == Symmetry::Symmetric && r != c {
                    trip.push((c - 1, r - 1, v));
                }
                seen += 1;
            }
        }
    }
    let Some((n, _)) = size else {
        return Err(parse_err(hline + 1, "missing size line".into()));
    };
    if seen != expected {
        return Err(ProblemError::Parse {
            line: 0,
            message: format!("expected {expected} entries, found {seen}"),
        });
    }
    Ok(CsrMatrix::from_triplets(n, &trip)?)
}

/// Writes `a` as a general real coordinate matrix with round-trip precision.
pub fn write_matrix_market(path: &Path, a: &CsrMatrix) -> Result<(), ProblemError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", a.n(), a.n(), a.nnz())?;
        for i in 0..a.n() {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
            }
        }
        w.flush()
    };
    body().map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn parse(s: &str) -> Result<CsrMatrix, ProblemError> {
        parse_matrix_market(s.as_bytes())
    }

    #[test]
    fn diagonal_file() {
        let a = parse("%%MatrixMarket matrix coordinate real general\n% comment\n2 2 2\n1 1 2.0\n2 2 3.0\n").unwrap();
        assert_eq!(a.to_dense(), dmatrix![2.0, 0.0; 0.0, 3.0]);
    }

    #[test]
    fn symmetric_expansion() {
        let a = parse("%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n1 1 1\n3 1 -4.5\n2 2 2\n").unwrap();
        let d = a.to_dense();
        assert_eq!(d, d.transpose());
        assert_eq!(d[(0, 2)], -4.5);
        assert_eq!(d[(2, 0)], -4.5);
        assert_eq!(a.nnz(), 4);
    }

    #[test]
    fn unsupported_and_malformed() {
        assert!(matches!(
            parse("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n"),
            Err(ProblemError::UnsupportedFormat(_))
        ));
        assert!(matches!(
            parse("%%MatrixMarket matrix coordinate pattern general\n1 1 1\n1 1\n"),
            Err(ProblemError::UnsupportedFormat(_))
        ));
        assert!(matches!(
            parse("%%MatrixMarket matrix array real general\n1 1\n1\n"),
            Err(ProblemError::UnsupportedFormat(_))
        ));
        assert!(matches!(parse("%%MatrixMarket matrix\n"), Err(ProblemError::Parse { line: 1, .. })));
        assert!(matches!(
            parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 1.0\n"),
            Err(ProblemError::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n"),
            Err(ProblemError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn integer_field_accepted() {
        let a = parse("%%MatrixMarket matrix coordinate integer general\n2 2 1\n1 2 7\n").unwrap();
        assert_eq!(a.get(0, 1), 7.0);
    }

    #[test]
    fn write_then_read_is_exact() {
        let a = CsrMatrix::from_triplets(3, &[(0, 0, 1.0 / 3.0), (0, 2, -2.5e-17), (2, 1, 123456.789), (1, 1, 1e300)])
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.mtx");
        write_matrix_market(&path, &a).unwrap();
        assert_eq!(read_matrix_market(&path).unwrap(), a);
    }
}
