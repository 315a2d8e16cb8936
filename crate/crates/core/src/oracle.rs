//! Slow reference implementations over plain vectors.
//!
//! Nothing here touches the packed kernels, the tables or the parallel
//! primitives; every answer comes from a direct scan or recursion.

use crate::error::{Error, Result};

fn check_index(s: &[u64], i: u64) -> Result<()> {
    if i >= s.len() as u64 {
        return Err(Error::IndexOutOfRange { index: i, len: s.len() as u64 });
    }
    Ok(())
}

pub fn oracle_access(s: &[u64], i: u64) -> Result<u64> {
    check_index(s, i)?;
    Ok(s[i as usize])
}

/// Occurrences of `c` in `s[0..=i]`.
pub fn oracle_rank(s: &[u64], c: u64, i: u64) -> Result<u64> {
    check_index(s, i)?;
    Ok(s[..=i as usize].iter().filter(|&&x| x == c).count() as u64)
}

/// Occurrences of symbols `<= c` in `s[0..=i]`.
pub fn oracle_rank_le(s: &[u64], c: u64, i: u64) -> Result<u64> {
    check_index(s, i)?;
    Ok(s[..=i as usize].iter().filter(|&&x| x <= c).count() as u64)
}

/// Position of the `j`'th occurrence of `c`, `j >= 1`.
pub fn oracle_select(s: &[u64], c: u64, j: u64) -> Result<u64> {
    let mut seen = 0;
    for (p, &x) in s.iter().enumerate() {
        if x == c {
            seen += 1;
            if seen == j && j > 0 {
                return Ok(p as u64);
            }
        }
    }
    Err(Error::OccurrenceOutOfRange { occurrence: j, available: seen })
}

/// Node bitmaps keyed by heap index; children of `i` are `2i+1`, `2i+2`.
pub type OracleNodes = Vec<(u64, Vec<bool>)>;

/// Balanced tree over codes `0..sigma`: a node over `[a, b]` marks each
/// symbol with 1 iff it is at least `(a + b + 1) / 2`, and recursion stops
/// below ranges of size 2.
pub fn oracle_tree(s: &[u64], sigma: u64) -> OracleNodes {
    let mut out = Vec::new();
    if sigma < 2 {
        return out;
    }
    let mut size = 1u64;
    while size < sigma {
        size *= 2;
    }
    fn go(s: Vec<u64>, a: u64, b: u64, id: u64, root: bool, out: &mut OracleNodes) {
        if b - a + 1 < 2 || (s.is_empty() && !root) {
            return;
        }
        let mid = (a + b).div_ceil(2);
        let bits: Vec<bool> = s.iter().map(|&x| x >= mid).collect();
        let left: Vec<u64> = s.iter().copied().filter(|&x| x < mid).collect();
        let right: Vec<u64> = s.iter().copied().filter(|&x| x >= mid).collect();
        out.push((id, bits));
        go(left, a, mid - 1, 2 * id + 1, false, out);
        go(right, mid, b, 2 * id + 2, false, out);
    }
    go(s.to_vec(), 0, size - 1, 0, true, &mut out);
    out.sort_by_key(|x| x.0);
    out
}

/// Wavelet matrix levels over `ceil(log2 sigma)` bits, most significant
/// first, with the zero count of every level.
pub fn oracle_matrix(s: &[u64], sigma: u64) -> (Vec<Vec<bool>>, Vec<u64>) {
    let mut depth = 0;
    while (1u64 << depth) < sigma {
        depth += 1;
    }
    let mut cur = s.to_vec();
    let mut levels = Vec::new();
    let mut zeros = Vec::new();
    for l in 0..depth {
        let shift = depth - 1 - l;
        let bits: Vec<bool> = cur.iter().map(|&x| (x >> shift) & 1 == 1).collect();
        let mut next: Vec<u64> = cur.iter().copied().filter(|&x| (x >> shift) & 1 == 0).collect();
        zeros.push(next.len() as u64);
        next.extend(cur.iter().copied().filter(|&x| (x >> shift) & 1 == 1));
        levels.push(bits);
        cur = next;
    }
    (levels, zeros)
}

/// Tree shaped by explicit codewords (`book[sym]` as a bit string, first
/// bit at the root). Positions that complete a codeword are leaves.
pub fn oracle_shaped(s: &[u64], book: &[Vec<bool>]) -> OracleNodes {
    let mut out = Vec::new();
    if book.len() < 2 {
        return out;
    }
    fn go(s: Vec<u64>, path: Vec<bool>, id: u64, book: &[Vec<bool>], out: &mut OracleNodes) {
        if book.contains(&path) || (s.is_empty() && !path.is_empty()) {
            return;
        }
        let d = path.len();
        let bits: Vec<bool> = s.iter().map(|&x| book[x as usize][d]).collect();
        let left: Vec<u64> = s.iter().copied().filter(|&x| !book[x as usize][d]).collect();
        let right: Vec<u64> = s.iter().copied().filter(|&x| book[x as usize][d]).collect();
        out.push((id, bits));
        let mut lp = path.clone();
        lp.push(false);
        go(left, lp, 2 * id + 1, book, out);
        let mut rp = path;
        rp.push(true);
        go(right, rp, 2 * id + 2, book, out);
    }
    go(s.to_vec(), Vec::new(), 0, book, &mut out);
    out.sort_by_key(|x| x.0);
    out
}

/// Multiary tree of degree `d` over codes `0..sigma`. Codes get zero bits
/// appended until their length is a multiple of `log2 d`; node `i` at depth
/// β holds digit β of every routed code and its children are `d·i + 1 + x`.
pub fn oracle_multiary(s: &[u64], sigma: u64, d: u64) -> Vec<(u64, Vec<u64>)> {
    let mut bits = 0u32;
    while (1u64 << bits) < sigma {
        bits += 1;
    }
    let mut k = 0u32;
    while (1u64 << k) < d {
        k += 1;
    }
    let mut out = Vec::new();
    if bits == 0 {
        return out;
    }
    let digits = bits.div_ceil(k);
    let padded: Vec<u64> = s.iter().map(|&x| x << (digits * k - bits)).collect();
    fn go(s: Vec<u64>, beta: u32, digits: u32, k: u32, d: u64, id: u64, out: &mut Vec<(u64, Vec<u64>)>) {
        if beta == digits || (s.is_empty() && beta > 0) {
            return;
        }
        let shift = (digits - 1 - beta) * k;
        let seq: Vec<u64> = s.iter().map(|&x| (x >> shift) % d).collect();
        for x in 0..d {
            let child: Vec<u64> = s.iter().copied().filter(|&y| (y >> shift) % d == x).collect();
            go(child, beta + 1, digits, k, d, d * id + 1 + x, out);
        }
        out.push((id, seq));
    }
    go(padded, 0, digits, k, d, 0, &mut out);
    out.sort_by_key(|x| x.0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> Vec<u64> {
        "cafgaehbhfd".bytes().map(|b| (b - b'a') as u64).collect()
    }

    fn bit_string(b: &[bool]) -> String {
        b.iter().map(|&x| if x { '1' } else { '0' }).collect()
    }

    #[test]
    fn scans_on_fig1() {
        let s = fig1();
        assert_eq!(oracle_rank(&s, 0, 4).unwrap(), 2);
        assert_eq!(oracle_select(&s, 7, 1).unwrap(), 6);
        assert_eq!(oracle_rank_le(&s, 7, 10).unwrap(), 11);
        assert_eq!(oracle_access(&s, 5).unwrap(), 4);
        assert!(oracle_select(&s, 5, 3).is_err());
        assert!(oracle_rank(&s, 0, 11).is_err());
    }

    #[test]
    fn tree_on_fig1() {
        let t = oracle_tree(&fig1(), 8);
        assert_eq!(bit_string(&t[0].1), "00110110110");
        // left child sees c a a b d
        assert_eq!(bit_string(&t[1].1), "10001");
        assert!(oracle_tree(&[], 1).is_empty());
        assert_eq!(oracle_tree(&[], 4), vec![(0, vec![])]);
        assert_eq!(oracle_tree(&[1, 0, 1], 2), vec![(0, vec![true, false, true])]);
    }

    #[test]
    fn matrix_on_fig1() {
        let (levels, z) = oracle_matrix(&fig1(), 8);
        assert_eq!(bit_string(&levels[0]), "00110110110");
        assert_eq!(z[0], 5);
        assert_eq!(bit_string(&levels[1]), "10001010110");
    }

    #[test]
    fn multiary_root_digits() {
        let m = oracle_multiary(&fig1(), 8, 4);
        assert_eq!(m[0].1, vec![1, 0, 2, 3, 0, 2, 3, 0, 3, 2, 1]);
    }

    #[test]
    fn balanced_book_matches_tree() {
        let book: Vec<Vec<bool>> = (0..8u64).map(|c| (0..3).map(|b| (c >> (2 - b)) & 1 == 1).collect()).collect();
        assert_eq!(oracle_shaped(&fig1(), &book), oracle_tree(&fig1(), 8));
    }
}
