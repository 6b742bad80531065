//! Closed subsets of `[0,1]` as finite point clouds, and distances between
//! sets and between empirical laws.

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedSet {
    points: Vec<f64>,
}

impl ClosedSet {
    /// Sorts and deduplicates `points`; all must lie in `[0,1]`.
    pub fn new(mut points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty { op: "ClosedSet::new" });
        }
        if let Some(p) = points.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(invalid("points", format!("{p} is outside [0,1]")));
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        Ok(ClosedSet { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// `inf(F ∩ (t,∞))`, `+∞` when empty.
    pub fn d_t(&self, t: f64) -> f64 {
        d_t(&self.points, t)
    }
}

/// `inf(F ∩ (t,∞))` over sorted `points`, `+∞` when there is none.
pub fn d_t(points: &[f64], t: f64) -> f64 {
    let i = points.partition_point(|&p| p <= t);
    points.get(i).copied().unwrap_or(f64::INFINITY)
}

fn directed(a: &[f64], b: &[f64]) -> f64 {
    let mut j = 0;
    let mut worst = 0.0f64;
    for &x in a {
        while j + 1 < b.len() && b[j + 1] <= x {
            j += 1;
        }
        let mut d = (x - b[j]).abs();
        if j + 1 < b.len() {
            d = d.min((b[j + 1] - x).abs());
        }
        worst = worst.max(d);
    }
    worst
}

/// Hausdorff distance between two nonempty sorted point sets.
pub fn hausdorff(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty { op: "hausdorff" });
    }
    Ok(directed(a, b).max(directed(b, a)))
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One-sample Kolmogorov–Smirnov distance to a continuous `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty { op: "ks_distance" });
    }
    let xs = sorted(samples);
    let n = xs.len() as f64;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max))
}

/// Sorted values with normalized cumulative weights, ties merged.
fn weighted_steps(values: &[f64], weights: Option<&[f64]>) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::Empty { op: "empirical law" });
    }
    let mut pairs: Vec<(f64, f64)> = match weights {
        Some(w) => {
            if w.len() != values.len() {
                return Err(invalid("weights", "length differs from the sample"));
            }
            values.iter().copied().zip(w.iter().copied()).collect()
        }
        None => values.iter().map(|&v| (v, 1.0)).collect(),
    };
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    if !(total > 0.0) {
        return Err(invalid("weights", "must have a positive sum"));
    }
    let mut steps: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
    let mut acc = 0.0;
    for (v, w) in pairs {
        acc += w;
        match steps.last_mut() {
            Some(last) if last.0 == v => last.1 = acc / total,
            _ => steps.push((v, acc / total)),
        }
    }
    if let Some(last) = steps.last_mut() {
        last.1 = 1.0;
    }
    Ok(steps)
}

/// Walks the union of jump points, calling `f(x, next_x, F_a(x), F_b(x))`.
fn merge_walk(a: &[(f64, f64)], b: &[(f64, f64)], mut f: impl FnMut(f64, f64, f64, f64)) {
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0, 0.0);
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(p), Some(q)) => p.0.min(q.0),
            (Some(p), None) => p.0,
            (None, Some(q)) => q.0,
            (None, None) => unreachable!(),
        };
        if i < a.len() && a[i].0 == x {
            fa = a[i].1;
            i += 1;
        }
        if j < b.len() && b[j].0 == x {
            fb = b[j].1;
            j += 1;
        }
        let next = match (a.get(i), b.get(j)) {
            (Some(p), Some(q)) => p.0.min(q.0),
            (Some(p), None) => p.0,
            (None, Some(q)) => q.0,
            (None, None) => x,
        };
        f(x, next, fa, fb);
    }
}

/// Two-sample KS distance; `weights_b` turns the second sample into a
/// weighted empirical law (importance-reweighted references).
pub fn ks_two_sample(a: &[f64], b: &[f64], weights_b: Option<&[f64]>) -> Result<f64> {
    let sa = weighted_steps(a, None)?;
    let sb = weighted_steps(b, weights_b)?;
    let mut d = 0.0f64;
    merge_walk(&sa, &sb, |_, _, fa, fb| d = d.max((fa - fb).abs()));
    Ok(d)
}

/// Wasserstein-1 distance `∫ |F_a - F_b|` between empirical laws, the second
/// optionally weighted.
pub fn wasserstein1(a: &[f64], b: &[f64], weights_b: Option<&[f64]>) -> Result<f64> {
    let sa = weighted_steps(a, None)?;
    let sb = weighted_steps(b, weights_b)?;
    let mut w = 0.0;
    merge_walk(&sa, &sb, |x, next, fa, fb| w += (fa - fb).abs() * (next - x));
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_passage_values() {
        assert_eq!(d_t(&[0.0, 0.5, 1.0], 0.3), 0.5);
        assert_eq!(d_t(&[0.5], 0.5), f64::INFINITY);
        assert_eq!(d_t(&[0.0], 0.0), f64::INFINITY);
        let s = ClosedSet::new(vec![1.0, 0.0, 0.5, 0.5]).unwrap();
        assert_eq!(s.points(), &[0.0, 0.5, 1.0]);
        assert!(ClosedSet::new(vec![]).is_err());
        assert!(ClosedSet::new(vec![1.5]).is_err());
    }

    #[test]
    fn hausdorff_values() {
        assert_eq!(hausdorff(&[0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(hausdorff(&[0.2, 0.7], &[0.2, 0.7]).unwrap(), 0.0);
        assert!((hausdorff(&[0.0, 0.4], &[0.1, 0.5]).unwrap() - 0.1).abs() < 1e-15);
        assert!(hausdorff(&[], &[0.1]).is_err());
    }

    #[test]
    fn ks_values() {
        let uniform = |x: f64| x.clamp(0.0, 1.0);
        assert_eq!(ks_distance(&[0.0, 0.0, 0.0], uniform).unwrap(), 1.0);
        assert!((ks_distance(&[0.25, 0.5, 0.75], uniform).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0], None).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&[0.0], &[1.0], None).unwrap(), 1.0);
        let w = ks_two_sample(&[1.0], &[1.0, 2.0], Some(&[1.0, 0.0])).unwrap();
        assert_eq!(w, 0.0);
    }

    #[test]
    fn wasserstein_values() {
        assert_eq!(wasserstein1(&[0.3, 0.6], &[0.6, 0.3], None).unwrap(), 0.0);
        assert_eq!(wasserstein1(&[0.0], &[1.0], None).unwrap(), 1.0);
        let a: Vec<f64> = (0..10_000).map(|i| (i as f64 + 0.5) / 1e4).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 0.1).collect();
        assert!((wasserstein1(&a, &b, None).unwrap() - 0.1).abs() < 1e-9);
        // unequal sizes integrate the CDF difference exactly
        assert!((wasserstein1(&[0.0, 1.0], &[0.5], None).unwrap() - 0.5).abs() < 1e-15);
        let weighted = wasserstein1(&[0.0], &[0.0, 1.0], Some(&[3.0, 1.0])).unwrap();
        assert!((weighted - 0.25).abs() < 1e-15);
    }

    fn brute_hausdorff(a: &[f64], b: &[f64]) -> f64 {
        let dir = |a: &[f64], b: &[f64]| {
            a.iter()
                .map(|x| b.iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        dir(a, b).max(dir(b, a))
    }

    fn arb_set() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..=1.0, 1..50).prop_map(|mut v| {
            v.sort_by(f64::total_cmp);
            v
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn hausdorff_matches_brute_force(a in arb_set(), b in arb_set()) {
            prop_assert!((hausdorff(&a, &b).unwrap() - brute_hausdorff(&a, &b)).abs() < 1e-12);
        }

        #[test]
        fn hausdorff_is_a_metric(a in arb_set(), b in arb_set(), c in arb_set()) {
            let ab = hausdorff(&a, &b).unwrap();
            prop_assert_eq!(ab, hausdorff(&b, &a).unwrap());
            prop_assert!(ab <= hausdorff(&a, &c).unwrap() + hausdorff(&c, &b).unwrap() + 1e-15);
            prop_assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        }

        #[test]
        fn first_passage_of_union_is_min(a in arb_set(), b in arb_set()) {
            let mut u = [a.clone(), b.clone()].concat();
            u.sort_by(f64::total_cmp);
            for i in 0..=20 {
                let t = i as f64 / 20.0;
                prop_assert_eq!(d_t(&u, t), d_t(&a, t).min(d_t(&b, t)));
            }
        }

        #[test]
        fn ks_is_reparameterization_invariant(xs in prop::collection::vec(0.0f64..1.0, 2..200), p in 0.2f64..5.0) {
            let uniform = |x: f64| x.clamp(0.0, 1.0);
            let mapped: Vec<f64> = xs.iter().map(|x| x.powf(p) * 3.0 - 1.0).collect();
            let d0 = ks_distance(&xs, uniform).unwrap();
            let d1 = ks_distance(&mapped, |y| uniform(((y + 1.0) / 3.0).powf(1.0 / p))).unwrap();
            prop_assert!((d0 - d1).abs() < 1e-12);
        }
    }
}
