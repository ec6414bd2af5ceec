//! Comma-separated input with header `x1,...,xp[,y]`.

use std::io::BufRead;

use crate::error::{FsgdError, Result};
use crate::estimator::Sample;

/// Parsed covariate rows, with responses when the file carries a `y` column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub p: usize,
    pub xs: Vec<Vec<f64>>,
    pub ys: Option<Vec<f64>>,
}

impl Table {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn samples(&self) -> Result<Vec<Sample>> {
        let ys = self
            .ys
            .as_ref()
            .ok_or_else(|| FsgdError::Config("input has no y column".into()))?;
        self.xs
            .iter()
            .zip(ys)
            .map(|(x, &y)| Sample::new(x.clone(), y))
            .collect()
    }
}

fn parse_header(line: &str) -> Result<(usize, bool)> {
    let cols: Vec<&str> = line.split(',').map(str::trim).collect();
    let with_y = cols.last() == Some(&"y");
    let xcols = if with_y { &cols[..cols.len() - 1] } else { &cols[..] };
    for (k, c) in xcols.iter().enumerate() {
        if *c != format!("x{}", k + 1) {
            return Err(FsgdError::Parse {
                line: 1,
                message: format!("header column {} is '{c}', expected 'x{}' (header must be x1,...,xp[,y])", k + 1, k + 1),
            });
        }
    }
    Ok((xcols.len(), with_y))
}

/// Reads a table. An input with no lines at all yields an empty table whose
/// dimension is `fallback_p`.
pub fn read_table<R: BufRead>(reader: R, fallback_p: Option<usize>) -> Result<Table> {
    let mut lines = reader.lines().enumerate();
    let header = loop {
        match lines.next() {
            None => {
                let p = fallback_p.ok_or_else(|| {
                    FsgdError::Config("input is empty; pass --p to set the dimension".into())
                })?;
                return Ok(Table { p, xs: Vec::new(), ys: None });
            }
            Some((_, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
        }
    };
    let (p, with_y) = parse_header(&header)?;
    if let Some(want) = fallback_p {
        if want != p {
            return Err(FsgdError::DimensionMismatch { expected: want, got: p });
        }
    }
    let width = p + usize::from(with_y);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(FsgdError::Parse {
                line: lineno,
                message: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        let mut values = Vec::with_capacity(width);
        for (k, f) in fields.iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| FsgdError::Parse {
                line: lineno,
                message: format!("field {} ('{f}') is not a number", k + 1),
            })?;
            if !v.is_finite() {
                return Err(FsgdError::Parse {
                    line: lineno,
                    message: format!("field {} is not finite", k + 1),
                });
            }
            values.push(v);
        }
        if with_y {
            ys.push(values.pop().expect("width > 0"));
        }
        if let Some(k) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(FsgdError::Parse {
                line: lineno,
                message: format!("x{} = {} lies outside [0, 1]", k + 1, values[k]),
            });
        }
        xs.push(values);
    }
    Ok(Table {
        p,
        xs,
        ys: with_y.then_some(ys),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<Table> {
        read_table(text.as_bytes(), None)
    }

    #[test]
    fn labelled_rows() {
        let t = read("x1,x2,y\n0.1,0.2,3\n\n1,0,-1.5\n").unwrap();
        assert_eq!(t.p, 2);
        assert_eq!(t.xs, vec![vec![0.1, 0.2], vec![1.0, 0.0]]);
        assert_eq!(t.ys, Some(vec![3.0, -1.5]));
        assert_eq!(t.samples().unwrap().len(), 2);
    }

    #[test]
    fn covariates_only() {
        let t = read("x1\n0.5\n").unwrap();
        assert_eq!(t.ys, None);
        assert!(t.samples().is_err());
    }

    #[test]
    fn header_only_and_empty() {
        let t = read("x1,x2,x3,y\n").unwrap();
        assert_eq!((t.p, t.len()), (3, 0));
        assert!(read("").is_err());
        assert_eq!(read_table("".as_bytes(), Some(4)).unwrap().p, 4);
    }

    #[test]
    fn errors_name_the_line() {
        match read("x1,y\n1.5,0\n") {
            Err(FsgdError::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("x1"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(read("x1,y\n0.5,0\n0.2\n"), Err(FsgdError::Parse { line: 3, .. })));
        assert!(matches!(read("x1,y\n0.5,abc\n"), Err(FsgdError::Parse { line: 2, .. })));
        assert!(matches!(read("x1,y\n0.5,NaN\n"), Err(FsgdError::Parse { line: 2, .. })));
        assert!(matches!(read("a,b\n"), Err(FsgdError::Parse { line: 1, .. })));
        assert!(matches!(read("x2,y\n"), Err(FsgdError::Parse { line: 1, .. })));
    }

    #[test]
    fn dimension_check() {
        assert!(matches!(
            read_table("x1,y\n0.5,1\n".as_bytes(), Some(2)),
            Err(FsgdError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }
}
