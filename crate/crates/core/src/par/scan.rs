use super::meter::{parallel_fill, parallel_map, CostMeter};

/// Elements per sequential leaf of the blocked scan.
pub const SCAN_GRAIN: usize = 2048;

/// Exclusive prefix sum under an associative operator.
///
/// Returns `(prefixes, total)` where `prefixes[i] = identity ⊕ xs[0] ⊕ … ⊕
/// xs[i-1]`. The operator need not be commutative: blocks are combined in
/// input order, so the result equals the serial left fold.
pub fn prefix_sum<T, F>(meter: &mut CostMeter, xs: &[T], op: F, identity: T) -> (Vec<T>, T)
where
    T: Copy + Send + Sync + Default,
    F: Fn(T, T) -> T + Sync,
{
    prefix_sum_with_grain(meter, xs, &op, identity, SCAN_GRAIN)
}

pub fn prefix_sum_with_grain<T, F>(
    meter: &mut CostMeter,
    xs: &[T],
    op: &F,
    identity: T,
    grain: usize,
) -> (Vec<T>, T)
where
    T: Copy + Send + Sync + Default,
    F: Fn(T, T) -> T + Sync,
{
    let grain = grain.max(2);
    let n = xs.len();
    if n <= grain {
        let mut out = Vec::with_capacity(n);
        let mut acc = identity;
        for &x in xs {
            out.push(acc);
            acc = op(acc, x);
        }
        // one combine and one store per element
        meter.charge(2 * n as u64);
        return (out, acc);
    }

    let blocks = n.div_ceil(grain);
    let totals = parallel_map(meter, blocks, 1, |m, b| {
        let lo = b * grain;
        let hi = (lo + grain).min(n);
        let mut it = xs[lo..hi].iter().copied();
        let first = it.next().expect("nonempty block");
        m.charge((hi - lo) as u64);
        it.fold(first, op)
    });
    let (offsets, total) = prefix_sum_with_grain(meter, &totals, op, identity, grain);

    let mut out = vec![T::default(); n];
    parallel_fill(meter, &mut out, grain, |m, off, slice| {
        let mut acc = offsets[off / grain];
        for (k, slot) in slice.iter_mut().enumerate() {
            *slot = acc;
            acc = op(acc, xs[off + k]);
        }
        m.charge(2 * slice.len() as u64);
    });
    (out, total)
}
