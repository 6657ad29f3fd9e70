//! Execution strategy for data-parallel loops.
//!
//! Every helper returns results in input order and never reorders a
//! floating-point reduction, so sequential and parallel runs are
//! bit-identical.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        self != Execution::Sequential
    }
}

/// `f(i, &items[i])` for every item, collected in order.
pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    match exec {
        Execution::Sequential => items.iter().enumerate().map(|(i, x)| f(i, x)).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect(),
    }
}

/// `f(i)` for `i in 0..n`, collected in order.
pub fn map_range<R, F>(exec: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
    }
}

/// `f(row_index, row)` over consecutive `width`-sized rows of `data`.
pub fn for_each_row<T, F>(exec: Execution, data: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    if width == 0 {
        return;
    }
    match exec {
        Execution::Sequential => data
            .chunks_mut(width)
            .enumerate()
            .for_each(|(i, row)| f(i, row)),
        #[cfg(feature = "parallel")]
        Execution::Parallel => data
            .par_chunks_mut(width)
            .enumerate()
            .for_each(|(i, row)| f(i, row)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strategies() -> Vec<Execution> {
        vec![
            Execution::Sequential,
            #[cfg(feature = "parallel")]
            Execution::Parallel,
        ]
    }

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..1000).collect();
        for exec in strategies() {
            assert_eq!(map(exec, &items, |i, x| x * 2 + i as u64), map_range(exec, 1000, |i| 3 * i as u64));
            let mut rows = vec![0usize; 30];
            for_each_row(exec, &mut rows, 3, |i, r| r.iter_mut().for_each(|x| *x = i));
            assert_eq!(rows[29], 9);
        }
    }
}
