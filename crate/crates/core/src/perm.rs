//! Lexicographic permutations and their ranks.
//!
//! The rank of a permutation of `0..m` is its position in lexicographic
//! order, so `unrank(k, m)` is the `k`-th item yielded by [`Lexicographic`].

pub fn factorial(m: usize) -> Option<usize> {
    (1..=m).try_fold(1usize, |acc, k| acc.checked_mul(k))
}

/// Permutation of `0..m` with lexicographic rank `index`. `index` must be `< m!`.
pub fn unrank(mut index: usize, m: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..m).collect();
    let mut out = Vec::with_capacity(m);
    for k in (0..m).rev() {
        let f = factorial(k).expect("factorial overflow");
        let pick = index / f;
        index %= f;
        out.push(pool.remove(pick));
    }
    out
}

/// Lexicographic rank of a permutation of `0..m`.
pub fn rank(perm: &[usize]) -> usize {
    let m = perm.len();
    let mut r = 0usize;
    for i in 0..m {
        let smaller = perm[i + 1..].iter().filter(|&&x| x < perm[i]).count();
        r += smaller * factorial(m - 1 - i).expect("factorial overflow");
    }
    r
}

/// In-place step to the next lexicographic permutation; false after the last.
pub fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Iterator over all permutations of `0..m` in lexicographic order.
#[derive(Debug, Clone)]
pub struct Lexicographic {
    current: Option<Vec<usize>>,
}

impl Lexicographic {
    pub fn new(m: usize) -> Self {
        Lexicographic {
            current: Some((0..m).collect()),
        }
    }
}

impl Iterator for Lexicographic {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.current.take()?;
        let mut nxt = cur.clone();
        if next_permutation(&mut nxt) {
            self.current = Some(nxt);
        }
        Some(cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_counts() {
        assert_eq!(Lexicographic::new(0).count(), 1);
        assert_eq!(Lexicographic::new(1).count(), 1);
        assert_eq!(Lexicographic::new(3).count(), 6);
        assert_eq!(Lexicographic::new(6).count(), 720);
    }

    #[test]
    fn rank_matches_enumeration_position() {
        for (k, p) in Lexicographic::new(5).enumerate() {
            assert_eq!(rank(&p), k);
            assert_eq!(unrank(k, 5), p);
        }
    }
}
