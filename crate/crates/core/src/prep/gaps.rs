use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Fills missing entries: interior runs by linear interpolation between the
/// nearest present neighbours, leading/trailing runs by holding the nearest
/// present value. Returns the filled values and a mask of filled positions.
/// Present values are copied through untouched.
pub fn fill_gaps(values: &[Option<f64>]) -> Result<(Vec<f64>, Vec<bool>)> {
    let present: Vec<usize> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|_| i))
        .collect();
    let (Some(&first), Some(&last)) = (present.first(), present.last()) else {
        return Err(Error::Empty("timeline has no present values to interpolate from"));
    };
    let mut out = vec![0.0; values.len()];
    let mask: Vec<bool> = values.iter().map(Option::is_none).collect();
    let at = |i: usize| values[i].unwrap();

    out[..first].fill(at(first));
    out[last..].fill(at(last));
    for pair in present.windows(2) {
        let (i0, i1) = (pair[0], pair[1]);
        let (a, b) = (at(i0), at(i1));
        out[i0] = a;
        let span = (i1 - i0) as f64;
        for (k, slot) in out[i0 + 1..i1].iter_mut().enumerate() {
            *slot = a + (b - a) * (k + 1) as f64 / span;
        }
    }
    out[last] = at(last);
    Ok((out, mask))
}

/// Applies [`fill_gaps`] column by column to `rows` (`present.len()` rows of
/// `dim` values, row-major). Rows whose `present` flag is false are
/// overwritten.
pub fn fill_gaps_rows(rows: &mut [f64], dim: usize, present: &[bool]) -> Result<()> {
    debug_assert_eq!(rows.len(), dim * present.len());
    if present.iter().all(|&p| p) {
        return Ok(());
    }
    let mut column = vec![None; present.len()];
    for d in 0..dim {
        for (t, slot) in column.iter_mut().enumerate() {
            *slot = present[t].then(|| rows[t * dim + d]);
        }
        let (filled, _) = fill_gaps(&column)?;
        for (t, v) in filled.into_iter().enumerate() {
            rows[t * dim + d] = v;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint() {
        let (v, m) = fill_gaps(&[Some(1.0), None, Some(3.0)]).unwrap();
        assert_eq!(v, vec![1.0, 2.0, 3.0]);
        assert_eq!(m, vec![false, true, false]);
    }

    #[test]
    fn edge_hold() {
        let (v, m) = fill_gaps(&[None, None, Some(5.0)]).unwrap();
        assert_eq!(v, vec![5.0, 5.0, 5.0]);
        assert_eq!(m, vec![true, true, false]);
        let (v, _) = fill_gaps(&[Some(-2.0), None]).unwrap();
        assert_eq!(v, vec![-2.0, -2.0]);
    }

    #[test]
    fn ramp() {
        let (v, _) = fill_gaps(&[Some(0.0), None, None, None, Some(4.0)]).unwrap();
        assert_eq!(v, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn all_missing() {
        assert!(fill_gaps(&[None, None]).is_err());
        assert!(fill_gaps(&[]).is_err());
    }

    #[test]
    fn rows_fill_each_column() {
        let mut rows = vec![0.0, 10.0, 99.0, 99.0, 2.0, 30.0];
        fill_gaps_rows(&mut rows, 2, &[true, false, true]).unwrap();
        assert_eq!(rows, vec![0.0, 10.0, 1.0, 20.0, 2.0, 30.0]);
    }
}
