//! Sparse recovery from a subset of node readings.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;

use crate::rng::{self, tag};
use crate::scene::Scene;
use crate::{Error, Result};

/// Readings collected so far: `w = Psi s`, one row per reporting node.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    indices: Vec<usize>,
    values: DVector<f64>,
    psi: DMatrix<f64>,
}

impl MeasurementSet {
    pub fn empty(basis_dim: usize) -> Self {
        Self { indices: Vec::new(), values: DVector::zeros(0), psi: DMatrix::zeros(0, basis_dim) }
    }

    pub fn from_scene(scene: &Scene, nodes: &[usize]) -> Result<Self> {
        let mut set = Self::empty(scene.basis_dim);
        set.append_from_scene(scene, nodes)?;
        Ok(set)
    }

    /// Stacks the readings of `nodes` below the existing rows.
    pub fn append_from_scene(&mut self, scene: &Scene, nodes: &[usize]) -> Result<()> {
        if self.psi.ncols() != scene.basis_dim {
            return Err(Error::LengthMismatch { expected: self.psi.ncols(), actual: scene.basis_dim });
        }
        for &k in nodes {
            if k >= scene.num_nodes {
                return Err(Error::Contract("node index out of range"));
            }
            if self.indices.contains(&k) {
                return Err(Error::Contract("node already reported"));
            }
        }
        let start = self.indices.len();
        let total = start + nodes.len();
        let mut psi = DMatrix::zeros(total, scene.basis_dim);
        psi.rows_mut(0, start).copy_from(&self.psi);
        let mut values = DVector::zeros(total);
        values.rows_mut(0, start).copy_from(&self.values);
        for (r, &k) in nodes.iter().enumerate() {
            psi.row_mut(start + r).copy_from(&scene.basis.column(k).transpose());
            values[start + r] = scene.target[k];
        }
        self.psi = psi;
        self.values = values;
        self.indices.extend_from_slice(nodes);
        Ok(())
    }

    /// Builds a set from explicit rows; used for synthetic problems.
    pub fn from_parts(indices: Vec<usize>, psi: DMatrix<f64>, values: DVector<f64>) -> Result<Self> {
        if psi.nrows() != indices.len() || values.len() != indices.len() {
            return Err(Error::LengthMismatch { expected: indices.len(), actual: psi.nrows().max(values.len()) });
        }
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Contract("measurement indices must be distinct"));
        }
        Ok(Self { indices, values, psi })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.psi
    }

    pub fn basis_dim(&self) -> usize {
        self.psi.ncols()
    }
}

/// How `lambda` is chosen when not given explicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverOptions {
    /// `lambda = lambda_scale * ||Psi^T w||_inf`.
    pub lambda_scale: f64,
    /// Stop once the largest coordinate move of a full sweep is below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Shuffle the coordinate order every sweep (seeded).
    pub randomized: bool,
    /// Support threshold for debiasing, relative to `max |s_hat|`.
    pub support_rel_threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { lambda_scale: 0.01, tol: 1e-8, max_iter: 10_000, randomized: false, support_rel_threshold: 1e-6 }
    }
}

impl SolverOptions {
    pub fn lambda_for(&self, set: &MeasurementSet) -> f64 {
        self.lambda_scale * set.psi.tr_mul(&set.values).amax()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub coef: DVector<f64>,
    pub lambda: f64,
    pub objective: f64,
    /// Sweeps performed (full and active-set).
    pub iterations: usize,
    pub converged: bool,
}

#[inline]
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// `(1/2)||w - Psi s||^2 + lambda ||s||_1`.
pub fn lasso_objective(set: &MeasurementSet, coef: &DVector<f64>, lambda: f64) -> f64 {
    let r = &set.values - &set.psi * coef;
    0.5 * r.norm_squared() + lambda * coef.iter().map(|x| x.abs()).sum::<f64>()
}

/// Lasso by cyclic coordinate descent with soft thresholding.
///
/// Alternates full sweeps with sweeps restricted to the current nonzero set;
/// only a full sweep whose largest move is below `tol` ends the solve. Hitting
/// `max_iter` returns the last iterate with `converged == false`.
pub fn lasso_solve(
    set: &MeasurementSet,
    lambda: f64,
    opts: &SolverOptions,
    warm_start: Option<&DVector<f64>>,
) -> Result<LassoFit> {
    let m = set.basis_dim();
    if set.is_empty() {
        return Err(Error::InvalidDimension("lasso needs at least one measurement"));
    }
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::Domain("lambda must be nonnegative"));
    }
    let psi = &set.psi;
    let mut coef = match warm_start {
        Some(w) if w.len() == m => w.clone(),
        Some(w) => return Err(Error::LengthMismatch { expected: m, actual: w.len() }),
        None => DVector::zeros(m),
    };
    let col_sq: Vec<f64> = (0..m).map(|j| psi.column(j).norm_squared()).collect();
    let mut resid = &set.values - psi * &coef;

    let mut order: Vec<usize> = (0..m).collect();
    let mut shuffle_rng = rng::stream(0, &[tag::SOLVER]);

    let update = |j: usize, coef: &mut DVector<f64>, resid: &mut DVector<f64>| -> f64 {
        if col_sq[j] == 0.0 {
            let old = coef[j];
            coef[j] = 0.0;
            return old.abs();
        }
        let col = psi.column(j);
        let rho = col.dot(resid) + col_sq[j] * coef[j];
        let new = soft_threshold(rho, lambda) / col_sq[j];
        let delta = new - coef[j];
        if delta != 0.0 {
            resid.axpy(-delta, &col, 1.0);
            coef[j] = new;
        }
        delta.abs()
    };

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        if opts.randomized {
            order.shuffle(&mut shuffle_rng);
        }
        iterations += 1;
        let mut max_move: f64 = 0.0;
        for &j in &order {
            max_move = max_move.max(update(j, &mut coef, &mut resid));
        }
        if max_move < opts.tol {
            converged = true;
            break;
        }
        // settle the active set before the next full pass
        let mut active: Vec<usize> = (0..m).filter(|&j| coef[j] != 0.0).collect();
        let mut inner_sweeps = 0;
        while iterations < opts.max_iter {
            iterations += 1;
            inner_sweeps += 1;
            let mut inner: f64 = 0.0;
            for &j in &active {
                inner = inner.max(update(j, &mut coef, &mut resid));
            }
            if inner < opts.tol {
                break;
            }
            if inner_sweeps % ORTHANT_STEP_EVERY == 0 {
                active.retain(|&j| coef[j] != 0.0);
                orthant_step(set, lambda, &active, &mut coef, &mut resid);
            }
        }
    }
    let objective = 0.5 * resid.norm_squared() + lambda * coef.iter().map(|x| x.abs()).sum::<f64>();
    Ok(LassoFit { coef, lambda, objective, iterations, converged })
}

const ORTHANT_STEP_EVERY: usize = 16;

/// Moves the active coordinates toward the exact minimizer of the objective on
/// their current sign orthant, truncated at the first sign change. Coordinate
/// descent crawls on nearly singular active sets; this only shortcuts the
/// crawl, the caller's full sweeps still certify optimality.
fn orthant_step(
    set: &MeasurementSet,
    lambda: f64,
    active: &[usize],
    coef: &mut DVector<f64>,
    resid: &mut DVector<f64>,
) {
    let mut active: Vec<usize> = active.to_vec();
    // With more active columns than rows the orthant objective falls linearly
    // along the null space of Psi_A; slide along it until a coordinate hits zero.
    while active.len() > set.len() {
        if !null_space_step(set, &active, coef) {
            return;
        }
        active.retain(|&j| coef[j] != 0.0);
        *resid = &set.values - &set.psi * &*coef;
    }
    let n = active.len();
    if n == 0 {
        return;
    }
    let sub = DMatrix::from_fn(set.len(), n, |r, c| set.psi[(r, active[c])]);
    let gram = sub.tr_mul(&sub);
    let rhs = sub.tr_mul(&set.values) - DVector::from_fn(n, |c, _| lambda * coef[active[c]].signum());
    let Some(chol) = gram.cholesky() else { return };
    let target = chol.solve(&rhs);
    // Walk toward the orthant minimizer, stopping where the first coordinate
    // would change sign. The objective is a convex quadratic along the way.
    let mut step: f64 = 1.0;
    let mut blocking = None;
    for (c, &j) in active.iter().enumerate() {
        let from = coef[j];
        if target[c].signum() != from.signum() || target[c] == 0.0 {
            let t = from / (from - target[c]);
            if t < step {
                step = t;
                blocking = Some(c);
            }
        }
    }
    let mut x = DVector::from_fn(n, |c, _| coef[active[c]] + step * (target[c] - coef[active[c]]));
    if let Some(c) = blocking {
        x[c] = 0.0;
    }
    let new_resid = &set.values - &sub * &x;
    let l1_old: f64 = active.iter().map(|&j| coef[j].abs()).sum();
    let l1_new: f64 = x.iter().map(|v| v.abs()).sum();
    let old_obj = 0.5 * resid.norm_squared() + lambda * l1_old;
    let new_obj = 0.5 * new_resid.norm_squared() + lambda * l1_new;
    if new_obj <= old_obj {
        for (c, &j) in active.iter().enumerate() {
            coef[j] = x[c];
        }
        *resid = new_resid;
    }
}

fn null_space_step(set: &MeasurementSet, active: &[usize], coef: &mut DVector<f64>) -> bool {
    let n = active.len();
    let sub = DMatrix::from_fn(set.len(), n, |r, c| set.psi[(r, active[c])]);
    let signs = DVector::from_fn(n, |c, _| coef[active[c]].signum());
    let Some(chol) = (&sub * sub.transpose()).cholesky() else { return false };
    let dir = sub.tr_mul(&chol.solve(&(&sub * &signs))) - &signs;
    if dir.norm() < 1e-12 * (n as f64) {
        return false;
    }
    let mut step = f64::INFINITY;
    let mut blocking = None;
    for c in 0..n {
        let from = coef[active[c]];
        if from * dir[c] < 0.0 {
            let t = -from / dir[c];
            if t < step {
                step = t;
                blocking = Some(c);
            }
        }
    }
    let Some(hit) = blocking else { return false };
    for c in 0..n {
        coef[active[c]] += step * dir[c];
    }
    coef[active[hit]] = 0.0;
    true
}

/// Largest violation of the lasso optimality conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// `max(|g_j| - lambda)` over zero coordinates, `g = Psi^T (w - Psi s)`.
    pub zero_excess: f64,
    /// `max |g_j - lambda sign(s_j)|` over nonzero coordinates.
    pub active_gap: f64,
}

pub fn kkt_report(set: &MeasurementSet, coef: &DVector<f64>, lambda: f64) -> KktReport {
    let grad = set.psi.tr_mul(&(&set.values - &set.psi * coef));
    let mut zero_excess = f64::NEG_INFINITY;
    let mut active_gap: f64 = 0.0;
    for j in 0..coef.len() {
        if coef[j] == 0.0 {
            zero_excess = zero_excess.max(grad[j].abs() - lambda);
        } else {
            active_gap = active_gap.max((grad[j] - lambda * coef[j].signum()).abs());
        }
    }
    KktReport { zero_excess, active_gap }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DebiasFit {
    pub coef: DVector<f64>,
    pub support: Vec<usize>,
    /// The restricted system was rank deficient; `coef` is the minimum-norm fit.
    pub rank_deficient: bool,
}

/// Least-squares refit of `w` on the columns where `|s_hat_j| > threshold`.
pub fn debias(s_hat: &DVector<f64>, set: &MeasurementSet, threshold: f64) -> Result<DebiasFit> {
    let m = set.basis_dim();
    if s_hat.len() != m {
        return Err(Error::LengthMismatch { expected: m, actual: s_hat.len() });
    }
    let support: Vec<usize> = (0..m).filter(|&j| s_hat[j].abs() > threshold).collect();
    let mut coef = DVector::zeros(m);
    if support.is_empty() || set.is_empty() {
        return Ok(DebiasFit { coef, support, rank_deficient: false });
    }
    let sub = DMatrix::from_fn(set.len(), support.len(), |r, c| set.psi[(r, support[c])]);
    let cols = sub.ncols();
    let svd = sub.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-10 * (set.len().max(support.len()) as f64);
    let rank = svd.rank(eps);
    let sol = svd.solve(&set.values, eps).map_err(Error::Contract)?;
    for (c, &j) in support.iter().enumerate() {
        coef[j] = sol[c];
    }
    Ok(DebiasFit { coef, support, rank_deficient: rank < cols })
}

/// `v_hat = B^T s_hat`.
pub fn reconstruct(basis: &DMatrix<f64>, s_hat: &DVector<f64>) -> Result<DVector<f64>> {
    if basis.nrows() != s_hat.len() {
        return Err(Error::LengthMismatch { expected: basis.nrows(), actual: s_hat.len() });
    }
    Ok(basis.tr_mul(s_hat))
}

/// `||v - v_hat||^2`.
pub fn squared_error(v: &[f64], v_hat: &[f64]) -> Result<f64> {
    if v.len() != v_hat.len() {
        return Err(Error::LengthMismatch { expected: v.len(), actual: v_hat.len() });
    }
    Ok(v.iter().zip(v_hat).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Lasso, debias and reconstruction in one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub s_hat: DVector<f64>,
    pub v_hat: DVector<f64>,
    /// Raw lasso coefficients, kept as the next round's warm start.
    pub lasso_coef: DVector<f64>,
    pub objective_value: f64,
    pub iterations_used: usize,
    pub converged: bool,
    pub rank_deficient: bool,
}

impl Estimate {
    pub fn zero(scene: &Scene) -> Self {
        Self {
            s_hat: DVector::zeros(scene.basis_dim),
            v_hat: DVector::zeros(scene.num_nodes),
            lasso_coef: DVector::zeros(scene.basis_dim),
            objective_value: 0.0,
            iterations_used: 0,
            converged: true,
            rank_deficient: false,
        }
    }

    pub fn from_measurements(
        scene: &Scene,
        set: &MeasurementSet,
        opts: &SolverOptions,
        warm_start: Option<&DVector<f64>>,
    ) -> Result<Self> {
        if set.is_empty() {
            return Ok(Self::zero(scene));
        }
        let lambda = opts.lambda_for(set);
        let fit = lasso_solve(set, lambda, opts, warm_start)?;
        let threshold = opts.support_rel_threshold * fit.coef.amax();
        let refit = debias(&fit.coef, set, threshold)?;
        let v_hat = reconstruct(&scene.basis, &refit.coef)?;
        Ok(Self {
            s_hat: refit.coef,
            v_hat,
            lasso_coef: fit.coef,
            objective_value: fit.objective,
            iterations_used: fit.iterations,
            converged: fit.converged,
            rank_deficient: refit.rank_deficient,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_problem(rows: usize, cols: usize, seed: u64) -> MeasurementSet {
        let mut rng = rng::stream(seed, &[42]);
        let psi = DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
        let w = DVector::from_fn(rows, |_, _| rng.sample::<f64, _>(StandardNormal));
        MeasurementSet::from_parts((0..rows).collect(), psi, w).unwrap()
    }

    /// Projected-subgradient-free oracle: proximal gradient (ISTA) with a
    /// fixed step, run far past convergence.
    fn ista_oracle(set: &MeasurementSet, lambda: f64, iters: usize) -> DVector<f64> {
        let psi = set.matrix();
        let lip = {
            // power iteration for ||Psi||_2^2
            let mut x = DVector::from_element(psi.ncols(), 1.0);
            for _ in 0..500 {
                let y = psi.tr_mul(&(psi * &x));
                x = &y / y.norm();
            }
            (psi.tr_mul(&(psi * &x))).norm()
        };
        let step = 1.0 / lip;
        let mut x = DVector::zeros(psi.ncols());
        for _ in 0..iters {
            let grad = psi.tr_mul(&(psi * &x - set.values()));
            x = (&x - grad * step).map(|z| soft_threshold(z, lambda * step));
        }
        x
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let mut set = random_problem(6, 4, 1);
        set.values.fill(0.0);
        let fit = lasso_solve(&set, 0.3, &SolverOptions::default(), None).unwrap();
        assert!(fit.coef.iter().all(|x| *x == 0.0));
        assert!(fit.converged);
    }

    #[test]
    fn scalar_soft_threshold() {
        let set = MeasurementSet::from_parts(vec![0], DMatrix::from_element(1, 1, 1.0), DVector::from_element(1, 2.0))
            .unwrap();
        let fit = lasso_solve(&set, 0.5, &SolverOptions::default(), None).unwrap();
        assert!((fit.coef[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn objective_matches_proximal_gradient_oracle() {
        let set = random_problem(20, 10, 3);
        let lambda = 0.1;
        let opts = SolverOptions { tol: 1e-12, ..SolverOptions::default() };
        let fit = lasso_solve(&set, lambda, &opts, None).unwrap();
        let oracle = ista_oracle(&set, lambda, 200_000);
        let want = lasso_objective(&set, &oracle, lambda);
        assert!((fit.objective - want).abs() / want < 1e-6, "{} vs {}", fit.objective, want);
    }

    #[test]
    fn kkt_certificate_holds() {
        for seed in 0..10 {
            let set = random_problem(15, 30, seed);
            let opts = SolverOptions::default();
            let lambda = opts.lambda_for(&set).max(0.05);
            let fit = lasso_solve(&set, lambda, &opts, None).unwrap();
            assert!(fit.converged);
            let kkt = kkt_report(&set, &fit.coef, lambda);
            let slack = opts.tol * kkt_slack(&set);
            assert!(kkt.zero_excess <= slack, "seed {seed}: {kkt:?}");
            assert!(kkt.active_gap <= slack, "seed {seed}: {kkt:?}");
        }
    }

    /// Coordinates move by less than `tol` after their last check, so the
    /// gradient of coordinate `j` drifts by at most `tol * sum_i |Psi_j . Psi_i|`.
    pub(crate) fn kkt_slack(set: &MeasurementSet) -> f64 {
        let g = set.matrix().tr_mul(set.matrix());
        (0..g.ncols()).map(|j| g.column(j).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    #[test]
    fn warm_start_reaches_same_optimum() {
        let set = random_problem(25, 40, 9);
        let opts = SolverOptions { tol: 1e-11, ..SolverOptions::default() };
        let cold = lasso_solve(&set, 0.2, &opts, None).unwrap();
        let start = DVector::from_element(40, 0.7);
        let warm = lasso_solve(&set, 0.2, &opts, Some(&start)).unwrap();
        assert!((cold.objective - warm.objective).abs() < 1e-9);
        let shuffled = lasso_solve(&set, 0.2, &SolverOptions { randomized: true, ..opts }, None).unwrap();
        assert!((cold.objective - shuffled.objective).abs() < 1e-9);
    }

    #[test]
    fn max_iter_reports_nonconvergence() {
        let set = random_problem(10, 30, 2);
        let opts = SolverOptions { max_iter: 1, tol: 1e-14, ..SolverOptions::default() };
        let fit = lasso_solve(&set, 1e-3, &opts, None).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iterations, 1);
    }

    #[test]
    fn debias_recovers_exact_values() {
        let scene = Scene::generate(64, 25, 3, 4).unwrap();
        let nodes: Vec<usize> = (0..64).step_by(3).take(20).collect();
        let set = MeasurementSet::from_scene(&scene, &nodes).unwrap();
        let mut guess = scene.sparse.clone() * 0.8;
        guess[scene.support[0]] *= 0.5;
        let fit = debias(&guess, &set, 1e-6).unwrap();
        assert!(!fit.rank_deficient);
        assert!((fit.coef - &scene.sparse).amax() < 1e-10);
    }

    #[test]
    fn debias_of_empty_support_is_zero() {
        let set = random_problem(5, 8, 1);
        let fit = debias(&DVector::zeros(8), &set, 1e-6).unwrap();
        assert!(fit.coef.iter().all(|x| *x == 0.0));
        assert!(fit.support.is_empty());
    }

    #[test]
    fn debias_flags_rank_deficiency() {
        let set = random_problem(3, 6, 4);
        let fit = debias(&DVector::from_element(6, 1.0), &set, 1e-6).unwrap();
        assert!(fit.rank_deficient);
        // minimum-norm solution still interpolates the data
        let r = set.values() - set.matrix() * &fit.coef;
        assert!(r.amax() < 1e-9);
    }

    #[test]
    fn lasso_then_debias_recovers_sparse_scene() {
        let scene = Scene::generate(64, 25, 3, 12).unwrap();
        let mut rng = rng::stream(1, &[2]);
        let nodes = rand::seq::index::sample(&mut rng, 64, 20).into_vec();
        let set = MeasurementSet::from_scene(&scene, &nodes).unwrap();
        let est = Estimate::from_measurements(&scene, &set, &SolverOptions::default(), None).unwrap();
        assert!((est.s_hat - &scene.sparse).amax() < 1e-8);
    }

    #[test]
    fn reconstruct_and_error() {
        let scene = Scene::generate(40, 10, 2, 1).unwrap();
        let v = reconstruct(&scene.basis, &scene.sparse).unwrap();
        assert!((v - &scene.target).amax() < 1e-12);
        let z = reconstruct(&scene.basis, &DVector::zeros(10)).unwrap();
        assert!(z.iter().all(|x| *x == 0.0));
        assert_eq!(squared_error(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(squared_error(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!(squared_error(&[1.0], &[1.0, 2.0]).is_err());
        assert!(reconstruct(&scene.basis, &DVector::zeros(9)).is_err());
    }

    #[test]
    fn measurement_rows_match_scene() {
        let scene = Scene::generate(50, 20, 4, 3).unwrap();
        let set = MeasurementSet::from_scene(&scene, &[4, 9, 17]).unwrap();
        let w = set.matrix() * &scene.sparse;
        assert!((w - set.values()).amax() < 1e-12);
        let mut again = set.clone();
        assert!(again.append_from_scene(&scene, &[9]).is_err());
    }
}
