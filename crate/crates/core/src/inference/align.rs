use crate::error::{Error, Result};

/// Advances `perm` to the next lexicographic permutation; false at the last.
fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Exhaustive search for the permutation `pi` minimising
/// `sum_k (fitted[pi[k]] - reference[k])^2`; ties go to the
/// lexicographically first permutation.
pub fn align_labels(fitted: &[f64], reference: &[f64]) -> Result<Vec<usize>> {
    let k = fitted.len();
    if reference.len() != k {
        return Err(Error::invalid("fitted and reference labels differ in length"));
    }
    if k > 8 {
        return Err(Error::invalid("label alignment is exhaustive and limited to K <= 8"));
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = perm.clone();
    let mut best_cost = f64::INFINITY;
    loop {
        let cost: f64 = perm.iter().zip(reference).map(|(&p, r)| (fitted[p] - r).powi(2)).sum();
        if cost < best_cost {
            best_cost = cost;
            best.copy_from_slice(&perm);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(best)
}

/// `out[k] = values[perm[k]]`.
pub fn apply_permutation(values: &[f64], perm: &[usize]) -> Vec<f64> {
    perm.iter().map(|&p| values[p]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_and_reverse() {
        let r = [-5.0, 0.0, 5.0];
        assert_eq!(align_labels(&r, &r).unwrap(), vec![0, 1, 2]);
        assert_eq!(align_labels(&[5.0, 0.0, -5.0], &r).unwrap(), vec![2, 1, 0]);
    }

    #[test]
    fn brute_force_three_clusters() {
        let perm = align_labels(&[0.1, -4.9, 5.2], &[-5.0, 0.0, 5.0]).unwrap();
        assert_eq!(perm, vec![1, 0, 2]);
    }

    #[test]
    fn ties_break_lexicographically() {
        assert_eq!(align_labels(&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]).unwrap(), vec![0, 1, 2]);
        assert!(align_labels(&[0.0; 9], &[0.0; 9]).is_err());
    }

    fn all_perms(k: usize) -> Vec<Vec<usize>> {
        let mut p: Vec<usize> = (0..k).collect();
        let mut out = vec![p.clone()];
        while next_permutation(&mut p) {
            out.push(p.clone());
        }
        out
    }

    #[test]
    fn enumerates_k_factorial() {
        assert_eq!(all_perms(4).len(), 24);
        assert_eq!(all_perms(1).len(), 1);
    }

    proptest! {
        #[test]
        fn chosen_permutation_is_optimal(f in proptest::collection::vec(-10.0f64..10.0, 1..7),
                                         seed in proptest::collection::vec(-10.0f64..10.0, 7)) {
            let r = &seed[..f.len()];
            let best = align_labels(&f, r).unwrap();
            let cost = |p: &[usize]| -> f64 { p.iter().zip(r).map(|(&i, v)| (f[i] - v).powi(2)).sum() };
            let c = cost(&best);
            for p in all_perms(f.len()) {
                prop_assert!(c <= cost(&p));
            }
        }
    }
}
