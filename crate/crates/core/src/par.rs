//! Data-parallel helpers. With the `parallel` feature these dispatch to rayon;
//! without it every helper runs sequentially. Results are identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Rows below this count are processed sequentially even when parallel.
#[cfg(feature = "parallel")]
const MIN_PAR_ROWS: usize = 64;

/// Applies `f(row_index, row)` to every `width`-long row of `data`.
pub(crate) fn for_each_row<T, F>(data: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    if width == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    {
        if data.len() / width >= MIN_PAR_ROWS {
            data.par_chunks_mut(width).enumerate().for_each(|(i, r)| f(i, r));
            return;
        }
    }
    data.chunks_mut(width).enumerate().for_each(|(i, r)| f(i, r));
}

/// Maps `f` over `items`, in parallel when `parallel` is set and the feature is on.
/// Output order always matches input order.
pub fn map_collect<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallel {
            return items.par_iter().map(f).collect();
        }
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

/// Whether parallel execution is compiled in.
pub const fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}
