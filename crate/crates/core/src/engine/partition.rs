use std::ops::Range;

/// Splits `0..n` into contiguous ranges whose sizes differ by at most one.
///
/// When `workers > n` only `n` singleton ranges are produced; the remaining
/// workers stay idle. Larger ranges come first.
pub fn partition(n: usize, workers: usize) -> Vec<Range<usize>> {
    let parts = n.min(workers.max(1));
    if parts == 0 {
        return Vec::new();
    }
    let base = n / parts;
    let extra = n % parts;
    let mut start = 0;
    (0..parts)
        .map(|k| {
            let len = base + usize::from(k < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sizes(rs: &[Range<usize>]) -> Vec<usize> {
        rs.iter().map(|r| r.len()).collect()
    }

    #[test]
    fn uneven_split() {
        assert_eq!(sizes(&partition(7, 3)), vec![3, 2, 2]);
    }

    #[test]
    fn one_neuron_per_thread() {
        let rs = partition(240, 240);
        assert_eq!(rs.len(), 240);
        assert!(rs.iter().enumerate().all(|(i, r)| *r == (i..i + 1)));
    }

    #[test]
    fn more_workers_than_cells() {
        let rs = partition(5, 9);
        assert_eq!(sizes(&rs), vec![1; 5]);
    }

    proptest! {
        #[test]
        fn contiguous_balanced_cover(n in 1usize..5000, workers in 1usize..300) {
            let rs = partition(n, workers);
            prop_assert_eq!(rs.len(), n.min(workers));
            prop_assert_eq!(rs[0].start, 0);
            prop_assert_eq!(rs.last().unwrap().end, n);
            for w in rs.windows(2) {
                prop_assert_eq!(w[0].end, w[1].start);
            }
            let s = sizes(&rs);
            let (lo, hi) = (s.iter().min().unwrap(), s.iter().max().unwrap());
            prop_assert!(hi - lo <= 1);
            prop_assert!(*lo >= 1);
        }
    }
}
