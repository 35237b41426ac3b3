//! Matrix import/export.
//!
//! CSV: the first line holds the column count `n_cols`; each following
//! line is one operator row written as `2 * n_cols` comma-separated floats,
//! real and imaginary parts interleaved.
//!
//! Binary: the 8-byte magic `ANISOCS1`, then `n_rows` and `n_cols` as
//! little-endian `u64`, then `2 * n_rows * n_cols` little-endian `f64`
//! (row-major, real/imaginary interleaved).

use std::io::{BufRead, Read, Write};

use super::{DenseOperator, C64};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"ANISOCS1";

pub fn write_csv<W: Write>(op: &DenseOperator, mut out: W) -> Result<()> {
    writeln!(out, "{}", op.n_cols())?;
    let m = op.matrix();
    for r in 0..op.n_rows() {
        let mut line = String::new();
        for c in 0..op.n_cols() {
            if c > 0 {
                line.push(',');
            }
            let z = m[(r, c)];
            line.push_str(&format!("{},{}", z.re, z.im));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(input: R) -> Result<DenseOperator> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty CSV".into()))??;
    let n_cols: usize = header
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("bad column-count header {header:?}")))?;
    let mut entries = Vec::new();
    let mut n_rows = 0;
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("row {i}: {e}")))?;
        if vals.len() != 2 * n_cols {
            return Err(Error::Format(format!(
                "row {i}: expected {} values, found {}",
                2 * n_cols,
                vals.len()
            )));
        }
        entries.extend(vals.chunks_exact(2).map(|p| C64::new(p[0], p[1])));
        n_rows += 1;
    }
    DenseOperator::from_row_major(n_rows, n_cols, &entries)
}

pub fn write_binary<W: Write>(op: &DenseOperator, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(op.n_rows() as u64).to_le_bytes())?;
    out.write_all(&(op.n_cols() as u64).to_le_bytes())?;
    let m = op.matrix();
    for r in 0..op.n_rows() {
        for c in 0..op.n_cols() {
            let z = m[(r, c)];
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<DenseOperator> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let n_rows = u64::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let n_cols = u64::from_le_bytes(word) as usize;
    let count = n_rows
        .checked_mul(n_cols)
        .ok_or_else(|| Error::Format("header dimensions overflow".into()))?;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        input.read_exact(&mut word)?;
        let re = f64::from_le_bytes(word);
        input.read_exact(&mut word)?;
        let im = f64::from_le_bytes(word);
        entries.push(C64::new(re, im));
    }
    DenseOperator::from_row_major(n_rows, n_cols, &entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn op_strategy() -> impl Strategy<Value = DenseOperator> {
        (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
            prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), r * c).prop_map(move |v| {
                let e: Vec<C64> = v.into_iter().map(|(a, b)| C64::new(a, b)).collect();
                DenseOperator::from_row_major(r, c, &e).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(op in op_strategy()) {
            let mut buf = Vec::new();
            write_csv(&op, &mut buf).unwrap();
            let back = read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, op);
        }

        #[test]
        fn binary_round_trip_is_exact(op in op_strategy()) {
            let mut buf = Vec::new();
            write_binary(&op, &mut buf).unwrap();
            prop_assert_eq!(buf.len(), 24 + 16 * op.n_rows() * op.n_cols());
            let back = read_binary(buf.as_slice()).unwrap();
            prop_assert_eq!(back, op);
        }
    }

    #[test]
    fn binary_layout() {
        let op = DenseOperator::from_row_major(1, 1, &[C64::new(1.5, -2.0)]).unwrap();
        let mut buf = Vec::new();
        write_binary(&op, &mut buf).unwrap();
        assert_eq!(&buf[..8], b"ANISOCS1");
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(buf[16..24].try_into().unwrap()), 1);
        assert_eq!(f64::from_le_bytes(buf[24..32].try_into().unwrap()), 1.5);
        assert_eq!(f64::from_le_bytes(buf[32..40].try_into().unwrap()), -2.0);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(read_binary(&b"NOTMAGIC"[..]), Err(Error::Format(_))));
        assert!(matches!(read_csv(&b"2\n1,0,2\n"[..]), Err(Error::Format(_))));
        assert!(matches!(read_csv(&b"x\n"[..]), Err(Error::Format(_))));
    }
}
