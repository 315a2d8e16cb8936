//! Fork-join primitives and the work/span cost meter.
//!
//! Every parallel primitive here splits its input by a fixed grain, so the
//! fork tree (and therefore the meter reading) is a function of the input
//! alone. Thread count only changes wall time.

mod meter;
mod scan;
mod sort;

pub use meter::{parallel_fill, parallel_for, parallel_map, with_threads, CostMeter, FORK_COST};
pub use scan::{prefix_sum, prefix_sum_with_grain, SCAN_GRAIN};
pub use sort::{stable_sort_by, stable_sort_by_key, SortItem};

/// Raw pointer into an output buffer, shared by tasks that write disjoint
/// slots.
#[derive(Clone, Copy)]
pub(crate) struct SyncPtr<T>(*mut T, usize);
unsafe impl<T: Send> Send for SyncPtr<T> {}
unsafe impl<T: Send> Sync for SyncPtr<T> {}

impl<T> SyncPtr<T> {
    pub(crate) fn new(out: &mut [T]) -> Self {
        SyncPtr(out.as_mut_ptr(), out.len())
    }

    /// # Safety
    /// No other task may write slot `i` while the buffer is shared.
    pub(crate) unsafe fn write(self, i: usize, v: T) {
        assert!(i < self.1, "slot {i} out of bounds");
        unsafe { self.0.add(i).write(v) }
    }
}
