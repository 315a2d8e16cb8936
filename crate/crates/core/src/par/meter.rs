use std::ops::Range;

/// Charge for one fork/join pair in the cost model.
pub const FORK_COST: u64 = 1;

/// Work/span accumulator for the fork-join cost model.
///
/// `work` counts every abstract word operation; `span` counts the operations
/// on the critical path. Sequential charges add to both. At a join the child
/// works are summed and the larger child span is added to the parent's span.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct CostMeter {
    work: u64,
    span: u64,
}

impl CostMeter {
    pub const fn new() -> Self {
        CostMeter { work: 0, span: 0 }
    }

    pub fn work(&self) -> u64 {
        self.work
    }

    pub fn span(&self) -> u64 {
        self.span
    }

    /// Charges `ops` sequential operations.
    #[inline]
    pub fn charge(&mut self, ops: u64) {
        self.work += ops;
        self.span += ops;
    }

    /// Adds a finished child computation that ran sequentially after the
    /// current position.
    pub fn absorb(&mut self, child: CostMeter) {
        self.work += child.work;
        self.span += child.span;
    }

    /// Charges a cost that was computed elsewhere and is replayed verbatim,
    /// such as a memoized table's construction cost.
    pub fn replay(&mut self, work: u64, span: u64) {
        self.work += work;
        self.span += span;
    }

    fn merge_children(&mut self, a: CostMeter, b: CostMeter) {
        self.work += a.work + b.work + FORK_COST;
        self.span += a.span.max(b.span) + FORK_COST;
    }

    /// Forks `a` and `b`, runs them (possibly in parallel) and joins their
    /// meters into `self`.
    pub fn join<A, B, RA, RB>(&mut self, a: A, b: B) -> (RA, RB)
    where
        A: FnOnce(&mut CostMeter) -> RA + Send,
        B: FnOnce(&mut CostMeter) -> RB + Send,
        RA: Send,
        RB: Send,
    {
        let ((ra, ma), (rb, mb)) = rayon::join(
            || {
                let mut m = CostMeter::new();
                let r = a(&mut m);
                (r, m)
            },
            || {
                let mut m = CostMeter::new();
                let r = b(&mut m);
                (r, m)
            },
        );
        self.merge_children(ma, mb);
        (ra, rb)
    }
}

/// Splits `0..leaves` in half recursively; the fork tree depends only on the
/// range and grain, never on the thread count.
fn leaf_split(len: usize, grain: usize) -> Option<usize> {
    let grain = grain.max(1);
    let leaves = len.div_ceil(grain);
    if leaves <= 1 {
        None
    } else {
        Some((leaves / 2) * grain)
    }
}

/// Runs `body` over `0..len` in leaves of at most `grain` indices.
pub fn parallel_for<F>(meter: &mut CostMeter, len: usize, grain: usize, body: F)
where
    F: Fn(&mut CostMeter, Range<usize>) + Sync,
{
    fn go<F>(meter: &mut CostMeter, range: Range<usize>, grain: usize, body: &F)
    where
        F: Fn(&mut CostMeter, Range<usize>) + Sync,
    {
        match leaf_split(range.len(), grain) {
            None => {
                if !range.is_empty() {
                    body(meter, range)
                }
            }
            Some(mid) => {
                let split = range.start + mid;
                meter.join(
                    |m| go(m, range.start..split, grain, body),
                    |m| go(m, split..range.end, grain, body),
                );
            }
        }
    }
    go(meter, 0..len, grain, &body);
}

/// Fills `out` in parallel; `body` receives the offset of its leaf slice.
pub fn parallel_fill<T, F>(meter: &mut CostMeter, out: &mut [T], grain: usize, body: F)
where
    T: Send,
    F: Fn(&mut CostMeter, usize, &mut [T]) + Sync,
{
    fn go<T: Send, F>(meter: &mut CostMeter, offset: usize, out: &mut [T], grain: usize, body: &F)
    where
        F: Fn(&mut CostMeter, usize, &mut [T]) + Sync,
    {
        match leaf_split(out.len(), grain) {
            None => {
                if !out.is_empty() {
                    body(meter, offset, out)
                }
            }
            Some(mid) => {
                let (left, right) = out.split_at_mut(mid);
                meter.join(
                    |m| go(m, offset, left, grain, body),
                    |m| go(m, offset + mid, right, grain, body),
                );
            }
        }
    }
    go(meter, 0, out, grain, &body);
}

/// Maps every index of `0..len` through `f` in parallel.
pub fn parallel_map<T, F>(meter: &mut CostMeter, len: usize, grain: usize, f: F) -> Vec<T>
where
    T: Send + Default,
    F: Fn(&mut CostMeter, usize) -> T + Sync,
{
    let mut out: Vec<T> = (0..len).map(|_| T::default()).collect();
    parallel_fill(meter, &mut out, grain, |m, offset, slice| {
        for (k, slot) in slice.iter_mut().enumerate() {
            *slot = f(m, offset + k);
        }
    });
    out
}

/// Runs `f` inside a dedicated pool with `threads` workers.
pub fn with_threads<R, F>(threads: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("failed to build thread pool");
    pool.install(f)
}
