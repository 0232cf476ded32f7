//! 0/1 knapsack for per-node state selection under degree-weighted storage.

use num_traits::{ToPrimitive, Zero};

use crate::rational::{int, Rational};

/// Budgets up to this size are solved exactly.
const EXACT_BUDGET: u64 = 10_000;
/// Largest profit-scaled table the approximation scheme may allocate.
const MAX_TABLE: usize = 1 << 22;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnapsackItem {
    pub profit: Rational,
    pub weight: u64,
}

/// Indices (ascending) of a subset with total weight ≤ `budget`.
///
/// Exact for budgets up to 10⁴; above that a profit-scaling scheme with
/// precision `epsilon` (value ≥ (1 − ε)·OPT) and, if even that table would
/// be too large, density greedy compared against the best single item
/// (value ≥ OPT/2). Items with non-positive profit are never chosen.
pub fn knapsack(items: &[KnapsackItem], budget: u64, epsilon: Rational) -> Vec<usize> {
    let useful: Vec<usize> =
        (0..items.len()).filter(|&i| items[i].profit > Rational::zero() && items[i].weight <= budget).collect();
    if useful.is_empty() {
        return Vec::new();
    }
    let total: u64 = useful.iter().map(|&i| items[i].weight).sum();
    if total <= budget {
        return useful;
    }
    let mut chosen = if budget <= EXACT_BUDGET {
        exact(items, &useful, budget)
    } else {
        scaled(items, &useful, budget, epsilon).unwrap_or_else(|| greedy(items, &useful, budget))
    };
    chosen.sort_unstable();
    chosen
}

fn exact(items: &[KnapsackItem], useful: &[usize], budget: u64) -> Vec<usize> {
    let cap = budget.min(useful.iter().map(|&i| items[i].weight).sum()) as usize;
    let mut best = vec![Rational::zero(); cap + 1];
    let mut take = vec![vec![false; cap + 1]; useful.len()];
    for (k, &i) in useful.iter().enumerate() {
        let w = items[i].weight as usize;
        for c in (w..=cap).rev() {
            let with = best[c - w] + items[i].profit;
            if with > best[c] {
                best[c] = with;
                take[k][c] = true;
            }
        }
    }
    let mut out = Vec::new();
    let mut c = cap;
    for k in (0..useful.len()).rev() {
        if take[k][c] {
            out.push(useful[k]);
            c -= items[useful[k]].weight as usize;
        }
    }
    out
}

fn scaled(items: &[KnapsackItem], useful: &[usize], budget: u64, epsilon: Rational) -> Option<Vec<usize>> {
    let n = useful.len();
    let pmax = useful.iter().map(|&i| items[i].profit).max().unwrap();
    let unit = epsilon * pmax / int(n as i64);
    let q: Vec<usize> = useful.iter().map(|&i| (items[i].profit / unit).floor().to_integer().to_usize().unwrap()).collect();
    let qsum: usize = q.iter().sum();
    if n.checked_mul(qsum + 1)? > MAX_TABLE {
        return None;
    }
    // minw[p]: least weight reaching scaled profit exactly p.
    let mut minw = vec![u64::MAX; qsum + 1];
    minw[0] = 0;
    let mut take = vec![vec![false; qsum + 1]; n];
    for k in 0..n {
        let w = items[useful[k]].weight;
        for p in (q[k]..=qsum).rev() {
            let prev = minw[p - q[k]];
            if prev != u64::MAX && prev + w < minw[p] {
                minw[p] = prev + w;
                take[k][p] = true;
            }
        }
    }
    let mut p = (0..=qsum).rev().find(|&p| minw[p] <= budget).unwrap();
    let mut out = Vec::new();
    for k in (0..n).rev() {
        if take[k][p] {
            out.push(useful[k]);
            p -= q[k];
        }
    }
    Some(out)
}

fn greedy(items: &[KnapsackItem], useful: &[usize], budget: u64) -> Vec<usize> {
    let mut order = useful.to_vec();
    order.sort_by(|&a, &b| {
        let da = items[a].profit / int(items[a].weight.max(1) as i64);
        let db = items[b].profit / int(items[b].weight.max(1) as i64);
        db.cmp(&da).then(a.cmp(&b))
    });
    let mut left = budget;
    let mut out = Vec::new();
    for i in order {
        if items[i].weight <= left {
            left -= items[i].weight;
            out.push(i);
        }
    }
    let value: Rational = out.iter().map(|&i| items[i].profit).sum();
    let single = *useful.iter().max_by(|&&a, &&b| items[a].profit.cmp(&items[b].profit).then(b.cmp(&a))).unwrap();
    if items[single].profit > value {
        vec![single]
    } else {
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn items(spec: &[(i64, u64)]) -> Vec<KnapsackItem> {
        spec.iter().map(|&(p, w)| KnapsackItem { profit: int(p), weight: w }).collect()
    }

    fn value(items: &[KnapsackItem], pick: &[usize]) -> Rational {
        pick.iter().map(|&i| items[i].profit).sum()
    }

    fn brute(items: &[KnapsackItem], budget: u64) -> Rational {
        (0u32..1 << items.len())
            .filter_map(|mask| {
                let pick: Vec<usize> = (0..items.len()).filter(|&i| mask >> i & 1 == 1).collect();
                let w: u64 = pick.iter().map(|&i| items[i].weight).sum();
                (w <= budget).then(|| value(items, &pick))
            })
            .max()
            .unwrap()
    }

    #[test]
    fn small_cases() {
        let it = items(&[(18, 3), (9, 3), (10, 2), (-4, 1)]);
        assert_eq!(knapsack(&it, 3, Rational::new(1, 10)), vec![0]);
        assert_eq!(knapsack(&it, 5, Rational::new(1, 10)), vec![0, 2]);
        assert_eq!(knapsack(&it, 100, Rational::new(1, 10)), vec![0, 1, 2]);
        assert!(knapsack(&it, 0, Rational::new(1, 10)).is_empty());
    }

    #[test]
    fn large_budget_uses_approximation() {
        let it = items(&[(30, 20_000), (20, 15_000), (20, 15_000)]);
        let got = knapsack(&it, 30_000, Rational::new(1, 10));
        assert_eq!(got, vec![1, 2]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn exact_matches_brute_force(spec in prop::collection::vec((-5i64..40, 1u64..12), 0..10), budget in 0u64..40) {
            let it = items(&spec);
            let pick = knapsack(&it, budget, Rational::new(1, 10));
            let w: u64 = pick.iter().map(|&i| it[i].weight).sum();
            prop_assert!(w <= budget);
            prop_assert_eq!(value(&it, &pick), brute(&it, budget));
        }

        #[test]
        fn scaled_within_epsilon(spec in prop::collection::vec((1i64..60, 1u64..12), 1..10), budget in 1u64..40, e in 1i64..=10) {
            let it = items(&spec);
            let useful: Vec<usize> = (0..it.len()).filter(|&i| it[i].weight <= budget).collect();
            prop_assume!(!useful.is_empty());
            let eps = Rational::new(e, 10);
            let pick = scaled(&it, &useful, budget, eps).unwrap();
            let w: u64 = pick.iter().map(|&i| it[i].weight).sum();
            prop_assert!(w <= budget);
            prop_assert!(value(&it, &pick) >= (int(1) - eps) * brute(&it, budget));
        }

        #[test]
        fn greedy_at_least_half(spec in prop::collection::vec((1i64..60, 1u64..12), 1..10), budget in 1u64..40) {
            let it = items(&spec);
            let useful: Vec<usize> = (0..it.len()).filter(|&i| it[i].weight <= budget).collect();
            prop_assume!(!useful.is_empty());
            let pick = greedy(&it, &useful, budget);
            let w: u64 = pick.iter().map(|&i| it[i].weight).sum();
            prop_assert!(w <= budget);
            prop_assert!(value(&it, &pick) * int(2) >= brute(&it, budget));
        }
    }
}
