//! Small real-arithmetic helpers shared across modules.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Solve a dense real linear system in place by Gaussian elimination with
/// partial pivoting. `a` is overwritten; the solution lands in `rhs`.
pub fn solve_real<R: Real>(a: &mut [Vec<R>], rhs: &mut [R]) -> Result<()> {
    let n = a.len();
    debug_assert!(a.iter().all(|row| row.len() == n) && rhs.len() == n);
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if !(a[piv][col].abs() > R::zero()) {
            return Err(Error::Singular);
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f == R::zero() {
                continue;
            }
            for c in col..n {
                let v = a[col][c];
                a[r][c] = a[r][c] - f * v;
            }
            let v = rhs[col];
            rhs[r] = rhs[r] - f * v;
        }
    }
    for col in (0..n).rev() {
        let mut s = rhs[col];
        for c in col + 1..n {
            s = s - a[col][c] * rhs[c];
        }
        rhs[col] = s / a[col][col];
    }
    Ok(())
}

/// Inverse of a dense real matrix, column by column.
pub fn invert_real<R: Real>(f: &[Vec<R>]) -> Result<Vec<Vec<R>>> {
    let n = f.len();
    let mut out = vec![vec![R::zero(); n]; n];
    for col in 0..n {
        let mut a: Vec<Vec<R>> = f.to_vec();
        let mut rhs = vec![R::zero(); n];
        rhs[col] = R::one();
        solve_real(&mut a, &mut rhs)?;
        for (row, v) in rhs.into_iter().enumerate() {
            out[row][col] = v;
        }
    }
    Ok(out)
}

/// SplitMix64 step, used for deterministic per-case seeding.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a stream seed from a master seed and a case index.
pub fn case_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ 0x517c_c1b7_2722_0a95).wrapping_add(index))
}
