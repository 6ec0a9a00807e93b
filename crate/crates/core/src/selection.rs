//! Choosing which nodes the access point asks for next.
//!
//! All deterministic selectors break ties toward the lowest node index.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;

/// Floor for `|b_k . b_j|^2` in the correlation-normalized criterion.
pub const CORR_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Selector {
    Random,
    Magnitude,
    CorrNorm,
    Oracle,
}

impl Selector {
    pub const ALL: [Selector; 4] = [Selector::Random, Selector::Magnitude, Selector::CorrNorm, Selector::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Selector::Random => "random",
            Selector::Magnitude => "magnitude",
            Selector::CorrNorm => "corrnorm",
            Selector::Oracle => "oracle",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// Nodes already heard from, and the rest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcquiredSet {
    mask: Vec<bool>,
    count: usize,
}

impl AcquiredSet {
    pub fn new(num_nodes: usize) -> Self {
        Self { mask: vec![false; num_nodes], count: 0 }
    }

    pub fn num_nodes(&self) -> usize {
        self.mask.len()
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn contains(&self, node: usize) -> bool {
        self.mask[node]
    }

    /// Marks `nodes` as acquired; returns how many were new.
    pub fn insert_all(&mut self, nodes: &[usize]) -> usize {
        let mut added = 0;
        for &k in nodes {
            if !self.mask[k] {
                self.mask[k] = true;
                added += 1;
            }
        }
        self.count += added;
        added
    }

    pub fn acquired(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&k| self.mask[k]).collect()
    }

    /// Complement, ascending.
    pub fn candidates(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&k| !self.mask[k]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    /// In pick order.
    pub ids: Vec<usize>,
    /// Fewer candidates than requested; every candidate was taken.
    pub exhausted: bool,
    /// Correlation-normalized selection fell back to magnitude ordering.
    pub fallback: bool,
}

impl Selection {
    fn new(ids: Vec<usize>, wanted: usize) -> Self {
        let exhausted = ids.len() < wanted;
        Self { ids, exhausted, fallback: false }
    }
}

/// Uniform `n`-subset of `candidates` without replacement.
pub fn select_random<R: Rng + ?Sized>(candidates: &[usize], n: usize, rng: &mut R) -> Selection {
    let take = n.min(candidates.len());
    let ids = index::sample(rng, candidates.len(), take).into_iter().map(|i| candidates[i]).collect();
    Selection::new(ids, n)
}

/// Greedy `argmax |v_hat_k|^2` over the remaining candidates, `n` times.
pub fn select_magnitude(v_hat: &[f64], candidates: &[usize], n: usize) -> Selection {
    let scores: Vec<f64> = candidates.iter().map(|&k| v_hat[k] * v_hat[k]).collect();
    let mut remaining: Vec<bool> = vec![true; candidates.len()];
    let take = n.min(candidates.len());
    let mut ids = Vec::with_capacity(take);
    for _ in 0..take {
        let mut best: Option<usize> = None;
        for (i, &k) in candidates.iter().enumerate() {
            if !remaining[i] {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(b) if beats(scores[i], k, scores[b], candidates[b]) => Some(i),
                keep => keep,
            };
        }
        let b = best.expect("take <= candidates");
        remaining[b] = false;
        ids.push(candidates[b]);
    }
    Selection::new(ids, n)
}

/// Genie baseline: magnitude ordering on the true field.
pub fn select_oracle(v_true: &[f64], candidates: &[usize], n: usize) -> Selection {
    select_magnitude(v_true, candidates, n)
}

/// Greedy correlation-normalized selection.
///
/// Keeps a running set `A` (initially `acquired`). Each step picks the
/// candidate maximizing `min_{j in A} |b_k . s_hat|^2 / max(|b_k . b_j|^2, eps)`
/// and adds it to `A`. With `acquired` empty this is the magnitude criterion
/// and the result is flagged as a fallback.
pub fn select_corr_normalized(
    s_hat: &DVector<f64>,
    basis: &DMatrix<f64>,
    acquired: &[usize],
    candidates: &[usize],
    n: usize,
) -> Selection {
    let v_hat = basis.tr_mul(s_hat);
    if acquired.is_empty() {
        let mut sel = select_magnitude(v_hat.as_slice(), candidates, n);
        sel.fallback = true;
        return sel;
    }
    let numer: Vec<f64> = candidates.iter().map(|&k| v_hat[k] * v_hat[k]).collect();
    let mut min_ratio = vec![f64::INFINITY; candidates.len()];
    let absorb = |j: usize, min_ratio: &mut [f64], remaining: &[bool]| {
        let bj = basis.column(j);
        for (i, &k) in candidates.iter().enumerate() {
            if remaining[i] {
                let c = basis.column(k).dot(&bj);
                let r = numer[i] / (c * c).max(CORR_EPS);
                if r < min_ratio[i] {
                    min_ratio[i] = r;
                }
            }
        }
    };
    let mut remaining = vec![true; candidates.len()];
    for &j in acquired {
        absorb(j, &mut min_ratio, &remaining);
    }
    let take = n.min(candidates.len());
    let mut ids = Vec::with_capacity(take);
    for _ in 0..take {
        let mut best: Option<usize> = None;
        for (i, &k) in candidates.iter().enumerate() {
            if !remaining[i] {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(b) if beats(min_ratio[i], k, min_ratio[b], candidates[b]) => Some(i),
                keep => keep,
            };
        }
        let b = best.expect("take <= candidates");
        remaining[b] = false;
        ids.push(candidates[b]);
        absorb(candidates[b], &mut min_ratio, &remaining);
    }
    Selection::new(ids, n)
}

#[inline]
fn beats(score: f64, id: usize, best_score: f64, best_id: usize) -> bool {
    score > best_score || (score == best_score && id < best_id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::scene::Scene;
    use proptest::prelude::{prop_assert, prop_assert_eq, prop_oneof, proptest, ProptestConfig};
    use rand_distr::StandardNormal;

    /// Full sort on `(-|v|^2, index)`.
    fn sort_oracle(v: &[f64], candidates: &[usize], n: usize) -> Vec<usize> {
        let mut c = candidates.to_vec();
        c.sort_by(|&a, &b| (v[b] * v[b]).partial_cmp(&(v[a] * v[a])).unwrap().then(a.cmp(&b)));
        c.truncate(n);
        c
    }

    /// Recomputes every candidate/acquired pair from scratch at each step.
    fn brute_corrnorm(
        s_hat: &DVector<f64>,
        basis: &DMatrix<f64>,
        acquired: &[usize],
        candidates: &[usize],
        n: usize,
    ) -> Vec<usize> {
        let mut set: Vec<usize> = acquired.to_vec();
        let mut left: Vec<usize> = candidates.to_vec();
        let mut out = Vec::new();
        for _ in 0..n.min(candidates.len()) {
            let mut best = (f64::NEG_INFINITY, usize::MAX);
            for &k in &left {
                let bk = basis.column(k);
                let num = bk.dot(s_hat).powi(2);
                let score = set
                    .iter()
                    .map(|&j| num / bk.dot(&basis.column(j)).powi(2).max(CORR_EPS))
                    .fold(f64::INFINITY, f64::min);
                if score > best.0 || (score == best.0 && k < best.1) {
                    best = (score, k);
                }
            }
            out.push(best.1);
            set.push(best.1);
            left.retain(|&k| k != best.1);
        }
        out
    }

    #[test]
    fn random_takes_everything_when_forced() {
        let cands: Vec<usize> = (0..10).collect();
        let mut rng = rng::stream(1, &[]);
        let mut sel = select_random(&cands, 10, &mut rng).ids;
        sel.sort_unstable();
        assert_eq!(sel, cands);
    }

    #[test]
    fn random_members_are_distinct_candidates() {
        let cands: Vec<usize> = (0..300).collect();
        let mut rng = rng::stream(2, &[]);
        let sel = select_random(&cands, 10, &mut rng);
        assert_eq!(sel.ids.len(), 10);
        let mut s = sel.ids.clone();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 10);
        assert!(!sel.exhausted);
        let short = select_random(&cands[..3], 5, &mut rng);
        assert!(short.exhausted);
        assert_eq!(short.ids.len(), 3);
    }

    #[test]
    fn random_single_picks_are_uniform() {
        // chi-square with 19 dof; 36.19 is the 0.99 quantile
        let cands: Vec<usize> = (0..20).collect();
        let mut rng = rng::stream(3, &[]);
        let mut counts = [0usize; 20];
        let draws = 10_000;
        for _ in 0..draws {
            counts[select_random(&cands, 1, &mut rng).ids[0]] += 1;
        }
        let e = draws as f64 / 20.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        assert!(chi2 < 36.19, "chi2 {chi2}");
    }

    #[test]
    fn magnitude_examples() {
        assert_eq!(select_magnitude(&[3.0, -5.0, 1.0], &[0, 1, 2], 1).ids, vec![1]);
        assert_eq!(select_magnitude(&[2.0, -2.0, 2.0], &[0, 1, 2], 2).ids, vec![0, 1]);
        let mut v = vec![0.0; 10];
        v[7] = 4.0;
        assert_eq!(select_oracle(&v, &(0..10).collect::<Vec<_>>(), 1).ids, vec![7]);
        assert_eq!(select_oracle(&[1.0, 1.0, -1.0], &[0, 1, 2], 3).ids, vec![0, 1, 2]);
    }

    #[test]
    fn magnitude_matches_sort_oracle() {
        let mut rng = rng::stream(4, &[]);
        for _ in 0..20 {
            let v: Vec<f64> = (0..300).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let cands: Vec<usize> = (0..300).filter(|k| k % 7 != 0).collect();
            assert_eq!(select_magnitude(&v, &cands, 40).ids, sort_oracle(&v, &cands, 40));
        }
    }

    #[test]
    fn orthogonal_candidates_reduce_to_magnitude() {
        // acquired vectors live on the first two axes, candidates on the rest
        let m = 8;
        let basis = DMatrix::from_fn(m, m, |i, k| if i == k { 1.0 } else { 0.0 });
        let s = DVector::from_vec(vec![0.0, 0.0, 0.5, -3.0, 2.0, 0.1, 2.0, 0.0]);
        let cands: Vec<usize> = (2..m).collect();
        let sel = select_corr_normalized(&s, &basis, &[0, 1], &cands, 3);
        assert!(!sel.fallback);
        assert_eq!(sel.ids, select_magnitude(s.as_slice(), &cands, 3).ids);
    }

    #[test]
    fn parallel_candidate_ranks_below_orthogonal_one() {
        // node 0 acquired; node 1 duplicates it, node 2 is orthogonal; same |v|
        let basis = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let s = DVector::from_vec(vec![1.0, 1.0]);
        let sel = select_corr_normalized(&s, &basis, &[0], &[1, 2], 1);
        assert_eq!(sel.ids, vec![2]);
    }

    #[test]
    fn empty_acquired_falls_back_to_magnitude() {
        let scene = Scene::generate(64, 20, 4, 1).unwrap();
        let cands: Vec<usize> = (0..64).collect();
        let sel = select_corr_normalized(&scene.sparse, &scene.basis, &[], &cands, 6);
        assert!(sel.fallback);
        assert_eq!(sel.ids, select_magnitude(scene.target.as_slice(), &cands, 6).ids);
    }

    #[test]
    fn corrnorm_matches_brute_force_greedy() {
        for seed in 0..10 {
            let scene = Scene::generate(64, 25, 5, seed).unwrap();
            let mut rng = rng::stream(seed, &[9]);
            let s_hat = DVector::from_fn(25, |_, _| rng.sample::<f64, _>(StandardNormal));
            let acquired = index::sample(&mut rng, 64, 5).into_vec();
            let cands: Vec<usize> = (0..64).filter(|k| !acquired.contains(k)).collect();
            let fast = select_corr_normalized(&s_hat, &scene.basis, &acquired, &cands, 5);
            assert_eq!(fast.ids, brute_corrnorm(&s_hat, &scene.basis, &acquired, &cands, 5), "seed {seed}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn selectors_return_distinct_candidates(seed in 0u64..1000, n in 0usize..40, skip in 2usize..6) {
            let scene = Scene::generate(64, 16, 3, seed).unwrap();
            let cands: Vec<usize> = (0..64).filter(|k| k % skip != 0).collect();
            let acquired: Vec<usize> = (0..64).filter(|k| k % skip == 0).collect();
            let mut rng = rng::stream(seed, &[]);
            let s_hat = DVector::from_fn(16, |_, _| rng.sample::<f64, _>(StandardNormal));
            let v_hat = scene.basis.tr_mul(&s_hat);
            for sel in [
                select_random(&cands, n, &mut rng),
                select_magnitude(v_hat.as_slice(), &cands, n),
                select_corr_normalized(&s_hat, &scene.basis, &acquired, &cands, n),
                select_oracle(scene.target.as_slice(), &cands, n),
            ] {
                prop_assert_eq!(sel.ids.len(), n.min(cands.len()));
                let mut ids = sel.ids.clone();
                ids.sort_unstable();
                ids.dedup();
                prop_assert_eq!(ids.len(), sel.ids.len());
                prop_assert!(sel.ids.iter().all(|k| cands.contains(k)));
            }
        }

        #[test]
        fn ranking_is_scale_invariant(seed in 0u64..1000, c in prop_oneof![-100.0f64..-0.01, 0.01f64..100.0]) {
            let scene = Scene::generate(48, 16, 3, seed).unwrap();
            let mut rng = rng::stream(seed, &[1]);
            let s_hat = DVector::from_fn(16, |_, _| rng.sample::<f64, _>(StandardNormal));
            let acquired = index::sample(&mut rng, 48, 4).into_vec();
            let cands: Vec<usize> = (0..48).filter(|k| !acquired.contains(k)).collect();
            let scaled = &s_hat * c;
            let a = select_corr_normalized(&s_hat, &scene.basis, &acquired, &cands, 8);
            let b = select_corr_normalized(&scaled, &scene.basis, &acquired, &cands, 8);
            prop_assert_eq!(a.ids, b.ids);
            let v1 = scene.basis.tr_mul(&s_hat);
            let v2 = scene.basis.tr_mul(&scaled);
            prop_assert_eq!(select_magnitude(v1.as_slice(), &cands, 8).ids, select_magnitude(v2.as_slice(), &cands, 8).ids);
        }
    }
}
