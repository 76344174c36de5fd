//! Small helpers around the FFT backends.

/// Smallest even 5-smooth integer `>= n`.
pub(crate) fn fast_len(n: usize) -> usize {
    let mut m = n.max(2);
    if m % 2 == 1 {
        m += 1;
    }
    loop {
        if is_smooth(m) {
            return m;
        }
        m += 2;
    }
}

fn is_smooth(mut m: usize) -> bool {
    for p in [2, 3, 5] {
        while m.is_multiple_of(p) {
            m /= p;
        }
    }
    m == 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_lengths() {
        assert_eq!(fast_len(1), 2);
        assert_eq!(fast_len(7), 8);
        assert_eq!(fast_len(17), 18);
        assert_eq!(fast_len(1023), 1024);
        assert_eq!(fast_len(80_511), 81_000);
        for n in 1..2000 {
            let m = fast_len(n);
            assert!(m >= n && m.is_multiple_of(2) && is_smooth(m));
        }
    }
}
