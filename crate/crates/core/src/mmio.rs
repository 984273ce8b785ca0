//! Matrix Market coordinate format (real or integer; general or symmetric).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parses Matrix Market text. Symmetric storage is expanded; duplicate
/// entries are summed.
pub fn parse_matrix_market(text: &str) -> Result<CsrMatrix> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
    let h: Vec<String> = header.split_whitespace().map(|w| w.to_ascii_lowercase()).collect();
    if h.len() < 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" {
        return Err(perr(1, "missing %%MatrixMarket matrix header"));
    }
    if h[2] != "coordinate" {
        return Err(perr(1, format!("unsupported format `{}`", h[2])));
    }
    if h[3] != "real" && h[3] != "integer" {
        return Err(perr(1, format!("unsupported field `{}`", h[3])));
    }
    let symmetric = match h[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(perr(1, format!("unsupported symmetry `{other}`"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    let mut read = 0usize;
    for (ln, raw) in lines {
        let l = raw.trim();
        if l.is_empty() || l.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = l.split_whitespace().collect();
        match size {
            None => {
                if toks.len() != 3 {
                    return Err(perr(ln, "size line must have three integers"));
                }
                let p = |t: &str| t.parse::<usize>().map_err(|_| perr(ln, format!("bad integer `{t}`")));
                let s = (p(toks[0])?, p(toks[1])?, p(toks[2])?);
                if symmetric && s.0 != s.1 {
                    return Err(perr(ln, "symmetric matrix must be square"));
                }
                triplets.reserve(if symmetric { 2 * s.2 } else { s.2 });
                size = Some(s);
            }
            Some((m, n, nnz)) => {
                if toks.len() != 3 {
                    return Err(perr(ln, "entry line must have row, column and value"));
                }
                let i: usize = toks[0].parse().map_err(|_| perr(ln, "bad row index"))?;
                let j: usize = toks[1].parse().map_err(|_| perr(ln, "bad column index"))?;
                let v: f64 = toks[2].parse().map_err(|_| perr(ln, "bad value"))?;
                if i == 0 || j == 0 || i > m || j > n {
                    return Err(perr(ln, format!("index ({i}, {j}) out of range for {m}x{n}")));
                }
                read += 1;
                if read > nnz {
                    return Err(perr(ln, "more entries than declared"));
                }
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (m, n, nnz) = size.ok_or_else(|| perr(1, "missing size line"))?;
    if read != nnz {
        return Err(perr(text.lines().count(), format!("expected {nnz} entries, found {read}")));
    }
    CsrMatrix::from_triplets(m, n, &triplets)
}

/// Writes general coordinate storage with 17 significant digits.
pub fn format_matrix_market(a: &CsrMatrix) -> String {
    let mut s = String::with_capacity(32 * (a.nnz() + 2));
    s.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz());
    for i in 0..a.n_rows() {
        for (j, v) in a.row(i) {
            let _ = writeln!(s, "{} {} {:.16e}", i + 1, j + 1, v);
        }
    }
    s
}

pub fn read_matrix_market(path: &Path) -> Result<CsrMatrix> {
    parse_matrix_market(&std::fs::read_to_string(path)?)
}

pub fn write_matrix_market(a: &CsrMatrix, path: &Path) -> Result<()> {
    std::fs::write(path, format_matrix_market(a))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one() {
        let a = CsrMatrix::from_triplets(1, 1, &[(0, 0, 4.0)]).unwrap();
        let text = format_matrix_market(&a);
        assert_eq!(text.lines().nth(1).unwrap(), "1 1 1");
        assert_eq!(parse_matrix_market(&text).unwrap(), a);
    }

    #[test]
    fn duplicates_are_summed() {
        let text = "%%MatrixMarket matrix coordinate real general\n% c\n2 2 3\n1 1 1.5\n1 1 2.5\n2 1 -1\n";
        let a = parse_matrix_market(text).unwrap();
        // Dense accumulation oracle.
        let mut dense = [[0.0; 2]; 2];
        dense[0][0] += 1.5;
        dense[0][0] += 2.5;
        dense[1][0] += -1.0;
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(a.get(i, j), dense[i][j]);
            }
        }
    }

    #[test]
    fn symmetric_storage_is_expanded() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 2\n2 1 -1\n";
        let a = parse_matrix_market(text).unwrap();
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(1, 0), -1.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        match parse_matrix_market(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(parse_matrix_market("hello\n"), Err(Error::Parse { line: 1, .. })));
        let short = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
        assert!(parse_matrix_market(short).is_err());
    }
}
