//! Closed-form cost predictors for the recursive multipliers.

use crate::plan::{Method, MethodPlan};

/// Fundamental multiplications for two length-`n` operands.
///
/// Schoolbook costs `n²`. The recursive methods follow
/// `M(n) = (2k - 1) · M(⌈n / k⌉)` with `M(n) = n²` once `n ≤ base_cutoff`,
/// which equals `n^log_k(2k - 1)` when `base_cutoff = 1` and `n` is a power
/// of `k`. Lengths that are not powers of `k` get the value for the padded
/// operands the multipliers actually recurse on.
pub fn predicted_mult_count(plan: &MethodPlan, n: usize) -> u64 {
    let n = n as u64;
    if plan.method == Method::Schoolbook {
        return n * n;
    }
    let k = plan.k.max(2) as u64;
    let cutoff = plan.base_cutoff.max(1) as u64;
    let mut len = n;
    let mut factor = 1u64;
    while len > cutoff {
        len = len.div_ceil(k);
        factor *= 2 * k - 1;
    }
    factor * len * len
}

/// Number of splitting levels before the base case: `⌈log_k(n / base_cutoff)⌉`,
/// clamped at zero.
pub fn recursion_depth(plan: &MethodPlan, n: usize) -> u32 {
    if plan.method == Method::Schoolbook {
        return 0;
    }
    let k = plan.k.max(2) as u128;
    let cutoff = plan.base_cutoff.max(1) as u128;
    let n = n as u128;
    let mut depth = 0;
    let mut reach = cutoff;
    while reach < n {
        reach *= k;
        depth += 1;
    }
    depth
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(predicted_mult_count(&MethodPlan::schoolbook(), 4), 16);
        assert_eq!(predicted_mult_count(&MethodPlan::karatsuba(1), 512), 19_683);
        assert_eq!(predicted_mult_count(&MethodPlan::toom(3, 1), 729), 15_625);
        assert_eq!(predicted_mult_count(&MethodPlan::toom(4, 1), 256), 7u64.pow(4));
        assert_eq!(predicted_mult_count(&MethodPlan::karatsuba(1), 1), 1);
        // 512 → 16 blocks of 32 after 4 halvings: 3^4 · 32².
        assert_eq!(predicted_mult_count(&MethodPlan::karatsuba(32), 512), 81 * 1024);
    }

    #[test]
    fn depths() {
        assert_eq!(recursion_depth(&MethodPlan::karatsuba(1), 512), 9);
        assert_eq!(recursion_depth(&MethodPlan::toom(3, 1), 729), 6);
        assert_eq!(recursion_depth(&MethodPlan::toom(3, 1), 730), 7);
        assert_eq!(recursion_depth(&MethodPlan::karatsuba(1), 1), 0);
        assert_eq!(recursion_depth(&MethodPlan::toom(4, 1), 1), 0);
        assert_eq!(recursion_depth(&MethodPlan::karatsuba(32), 32), 0);
        assert_eq!(recursion_depth(&MethodPlan::karatsuba(32), 33), 1);
        assert_eq!(recursion_depth(&MethodPlan::schoolbook(), 4096), 0);
    }
}
