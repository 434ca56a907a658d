//! Exact 2-Wasserstein distance between uniform discrete measures.
//!
//! [`w2_exact`] solves the transportation linear program
//! `min Σ γ_ij ‖a_i − b_j‖²` with uniform marginals exactly — no entropic
//! regularization. Masses `1/N_a`, `1/N_b` are scaled to integers through
//! their lcm so feasibility is exact; in one dimension the optimal coupling
//! is the monotone rearrangement, and in higher dimensions a network simplex
//! on the (implicit) complete bipartite graph finds an optimal basic
//! solution. [`w2_bruteforce`] is the independent enumeration oracle used to
//! validate the solver on small instances.

mod simplex;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// `N` points in `R^dim` carrying uniform mass `1/N` each.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: DMatrix<f64>,
}

impl PointCloud {
    /// Wraps an `N × dim` matrix, one point per row.
    pub fn new(points: DMatrix<f64>) -> Result<Self> {
        if points.nrows() == 0 || points.ncols() == 0 {
            return Err(Error::InvalidInput("point cloud must be non-empty".into()));
        }
        linalg::ensure_finite(&points, "point cloud")?;
        Ok(Self { points })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("point cloud must be non-empty".into()));
        }
        let dim = rows[0].len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch("ragged point list".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        PointCloud::new(DMatrix::from_row_slice(rows.len(), dim, &flat))
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn point(&self, i: usize) -> DVector<f64> {
        self.points.row(i).transpose()
    }

    /// Shifts every point by `v`.
    pub fn translate(&self, v: &DVector<f64>) -> Result<PointCloud> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch("shift dimension mismatch".into()));
        }
        let shifted = DMatrix::from_fn(self.len(), self.dim(), |i, j| self.points[(i, j)] + v[j]);
        PointCloud::new(shifted)
    }
}

/// Value of an exact transport solve.
#[derive(Debug, Clone, PartialEq)]
pub struct W2Result {
    /// `√squared_cost`.
    pub distance: f64,
    /// Optimal value of the squared-cost transportation program.
    pub squared_cost: f64,
    /// Optimal coupling as `(row, col, mass)` triples; only kept on request.
    pub plan: Option<Vec<(usize, usize, f64)>>,
}

impl W2Result {
    fn from_cost(squared_cost: f64, plan: Option<Vec<(usize, usize, f64)>>) -> Self {
        W2Result {
            distance: squared_cost.max(0.0).sqrt(),
            squared_cost: squared_cost.max(0.0),
            plan,
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Per-point integer masses `(L/N_a, L/N_b, L)` with `L = lcm(N_a, N_b)`.
fn unit_masses(na: usize, nb: usize) -> (i64, i64, i64) {
    let l = (na as u64 / gcd(na as u64, nb as u64)) * nb as u64;
    ((l / na as u64) as i64, (l / nb as u64) as i64, l as i64)
}

fn check_pair(a: &PointCloud, b: &PointCloud) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "clouds have dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

fn sq_dist(a: &DMatrix<f64>, i: usize, b: &DMatrix<f64>, j: usize) -> f64 {
    let mut acc = 0.0;
    for d in 0..a.ncols() {
        let diff = a[(i, d)] - b[(j, d)];
        acc += diff * diff;
    }
    acc
}

/// Exact squared-cost optimal transport between two uniform clouds.
pub fn w2_exact(a: &PointCloud, b: &PointCloud) -> Result<W2Result> {
    w2_exact_impl(a, b, false)
}

/// As [`w2_exact`], additionally returning the optimal coupling.
pub fn w2_exact_with_plan(a: &PointCloud, b: &PointCloud) -> Result<W2Result> {
    w2_exact_impl(a, b, true)
}

fn w2_exact_impl(a: &PointCloud, b: &PointCloud, want_plan: bool) -> Result<W2Result> {
    check_pair(a, b)?;
    if a.dim() == 1 {
        return Ok(one_dim_monotone(a, b, want_plan));
    }
    let (cost, plan) = simplex::solve(a.points(), b.points(), want_plan)?;
    Ok(W2Result::from_cost(cost, plan))
}

/// Monotone (sorted) coupling: optimal in one dimension for convex costs.
fn one_dim_monotone(a: &PointCloud, b: &PointCloud, want_plan: bool) -> W2Result {
    let (ua, ub, l) = unit_masses(a.len(), b.len());
    let mut ia: Vec<usize> = (0..a.len()).collect();
    let mut ib: Vec<usize> = (0..b.len()).collect();
    ia.sort_by(|&p, &q| a.points()[(p, 0)].total_cmp(&a.points()[(q, 0)]));
    ib.sort_by(|&p, &q| b.points()[(p, 0)].total_cmp(&b.points()[(q, 0)]));

    let mut plan = want_plan.then(Vec::new);
    let mut cost_units = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    let mut rem_a = ua;
    let mut rem_b = ub;
    while i < ia.len() && j < ib.len() {
        let take = rem_a.min(rem_b);
        let diff = a.points()[(ia[i], 0)] - b.points()[(ib[j], 0)];
        cost_units += take as f64 * diff * diff;
        if let Some(p) = plan.as_mut() {
            p.push((ia[i], ib[j], take as f64 / l as f64));
        }
        rem_a -= take;
        rem_b -= take;
        if rem_a == 0 {
            i += 1;
            rem_a = ua;
        }
        if rem_b == 0 {
            j += 1;
            rem_b = ub;
        }
    }
    if let Some(p) = plan.as_mut() {
        p.sort_unstable_by_key(|t| (t.0, t.1));
    }
    W2Result::from_cost(cost_units / l as f64, plan)
}

/// Exhaustive oracle: permutation minimum for equal sizes (`N ≤ 8`), basic
/// integer transportation tables otherwise (`N_a · N_b ≤ 12`).
pub fn w2_bruteforce(a: &PointCloud, b: &PointCloud) -> Result<W2Result> {
    check_pair(a, b)?;
    let (na, nb) = (a.len(), b.len());
    if na == nb {
        if na > 8 {
            return Err(Error::SizeLimit(format!(
                "permutation enumeration needs N <= 8, got {na}"
            )));
        }
        return Ok(bruteforce_permutations(a, b));
    }
    if na * nb > 12 {
        return Err(Error::SizeLimit(format!(
            "table enumeration needs N_a*N_b <= 12, got {}",
            na * nb
        )));
    }
    bruteforce_tables(a, b)
}

fn bruteforce_permutations(a: &PointCloud, b: &PointCloud) -> W2Result {
    let n = a.len();
    let cost = DMatrix::from_fn(n, n, |i, j| sq_dist(a.points(), i, b.points(), j));
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    let mut best_perm = perm.clone();
    // Heap's algorithm over all N! assignments.
    let mut counters = vec![0usize; n];
    let eval = |p: &[usize], best: &mut f64, best_perm: &mut Vec<usize>| {
        let total: f64 = p.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
        if total < *best {
            *best = total;
            best_perm.copy_from_slice(p);
        }
    };
    eval(&perm, &mut best, &mut best_perm);
    let mut i = 0;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            eval(&perm, &mut best, &mut best_perm);
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    let plan: Vec<(usize, usize, f64)> = best_perm
        .iter()
        .enumerate()
        .map(|(i, &j)| (i, j, 1.0 / n as f64))
        .collect();
    W2Result::from_cost(best / n as f64, Some(plan))
}

fn bruteforce_tables(a: &PointCloud, b: &PointCloud) -> Result<W2Result> {
    let (na, nb) = (a.len(), b.len());
    let (ua, ub, l) = unit_masses(na, nb);
    let cost = DMatrix::from_fn(na, nb, |i, j| sq_dist(a.points(), i, b.points(), j));
    let mut row_left = vec![ua; na];
    let mut col_left = vec![ub; nb];
    let mut table = vec![0i64; na * nb];
    let mut best = f64::INFINITY;
    let mut best_table = table.clone();

    // Row-major recursive fill over all integer tables with the given margins.
    #[allow(clippy::too_many_arguments)]
    fn fill(
        cell: usize,
        acc: f64,
        cost: &DMatrix<f64>,
        row_left: &mut [i64],
        col_left: &mut [i64],
        table: &mut [i64],
        best: &mut f64,
        best_table: &mut [i64],
        na: usize,
        nb: usize,
    ) {
        if acc >= *best {
            return;
        }
        if cell == na * nb {
            if row_left.iter().all(|&r| r == 0) && col_left.iter().all(|&c| c == 0) {
                *best = acc;
                best_table.copy_from_slice(table);
            }
            return;
        }
        let (i, j) = (cell / nb, cell % nb);
        let hi = row_left[i].min(col_left[j]);
        // Last column of a row must absorb the remainder.
        let lo = if j == nb - 1 { row_left[i] } else { 0 };
        if lo > hi {
            return;
        }
        for f in lo..=hi {
            row_left[i] -= f;
            col_left[j] -= f;
            table[cell] = f;
            fill(
                cell + 1,
                acc + f as f64 * cost[(i, j)],
                cost,
                row_left,
                col_left,
                table,
                best,
                best_table,
                na,
                nb,
            );
            row_left[i] += f;
            col_left[j] += f;
            table[cell] = 0;
        }
    }

    fill(
        0,
        0.0,
        &cost,
        &mut row_left,
        &mut col_left,
        &mut table,
        &mut best,
        &mut best_table,
        na,
        nb,
    );
    if !best.is_finite() {
        return Err(Error::NonConvergence("table enumeration found no feasible table".into()));
    }
    let plan: Vec<(usize, usize, f64)> = best_table
        .iter()
        .enumerate()
        .filter(|(_, &f)| f > 0)
        .map(|(cell, &f)| (cell / nb, cell % nb, f as f64 / l as f64))
        .collect();
    Ok(W2Result::from_cost(best / l as f64, Some(plan)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn random_cloud(rng: &mut impl Rng, n: usize, dim: usize) -> PointCloud {
        PointCloud::new(DMatrix::from_fn(n, dim, |_, _| rng.gen_range(-2.0..2.0))).unwrap()
    }

    fn plan_marginals_ok(result: &W2Result, na: usize, nb: usize) {
        let plan = result.plan.as_ref().expect("plan requested");
        let mut row = vec![0.0; na];
        let mut col = vec![0.0; nb];
        for &(i, j, mass) in plan {
            assert!(mass > 0.0);
            row[i] += mass;
            col[j] += mass;
        }
        for r in row {
            assert_abs_diff_eq!(r, 1.0 / na as f64, epsilon = 1e-12);
        }
        for c in col {
            assert_abs_diff_eq!(c, 1.0 / nb as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn identical_clouds_have_zero_distance() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let a = random_cloud(&mut rng, 20, 2);
        let r = w2_exact(&a, &a).unwrap();
        assert_abs_diff_eq!(r.distance, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn singletons_give_euclidean_distance() {
        let a = PointCloud::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let b = PointCloud::from_rows(&[vec![4.0, 6.0]]).unwrap();
        let r = w2_exact(&a, &b).unwrap();
        assert_abs_diff_eq!(r.distance, 5.0, epsilon = 1e-12);
        let bf = w2_bruteforce(&a, &b).unwrap();
        assert_abs_diff_eq!(bf.distance, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn two_versus_three_points_on_the_line() {
        // a = {0, 1} (mass 1/2 each), b = {0, 1, 2} (mass 1/3 each).
        // Exhaustive table enumeration provides the reference optimum.
        let a = PointCloud::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let b = PointCloud::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let bf = w2_bruteforce(&a, &b).unwrap();
        let exact = w2_exact_with_plan(&a, &b).unwrap();
        assert_abs_diff_eq!(exact.squared_cost, bf.squared_cost, epsilon = 1e-12);
        plan_marginals_ok(&exact, 2, 3);
        plan_marginals_ok(&bf, 2, 3);
        // Optimal split: 1/3 of a₁ stays at 0, 1/6 moves to 1 (cost 1/6);
        // 1/6 of a₂ stays at 1, 1/3 moves to 2 (cost 1/3).
        assert_abs_diff_eq!(bf.squared_cost, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn bruteforce_rejects_oversized_instances() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let a = random_cloud(&mut rng, 9, 2);
        let b = random_cloud(&mut rng, 9, 2);
        assert!(matches!(w2_bruteforce(&a, &b), Err(Error::SizeLimit(_))));
        let a = random_cloud(&mut rng, 4, 2);
        let b = random_cloud(&mut rng, 5, 2);
        assert!(matches!(w2_bruteforce(&a, &b), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn bruteforce_is_symmetric_in_its_arguments() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let a = random_cloud(&mut rng, 3, 2);
        let b = random_cloud(&mut rng, 3, 2);
        let ab = w2_bruteforce(&a, &b).unwrap();
        let ba = w2_bruteforce(&b, &a).unwrap();
        assert_abs_diff_eq!(ab.distance, ba.distance, epsilon = 1e-12);
    }

    #[test]
    fn exact_matches_bruteforce_on_random_instances() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let mut count = 0;
        for _ in 0..200 {
            let dim = rng.gen_range(1..=3);
            let (na, nb) = if rng.gen::<bool>() {
                let n = rng.gen_range(2..=6);
                (n, n)
            } else {
                [(2, 3), (2, 4), (3, 4)][rng.gen_range(0..3)]
            };
            let a = random_cloud(&mut rng, na, dim);
            let b = random_cloud(&mut rng, nb, dim);
            let exact = w2_exact_with_plan(&a, &b).unwrap();
            let oracle = w2_bruteforce(&a, &b).unwrap();
            assert!(
                (exact.squared_cost - oracle.squared_cost).abs() < 1e-9,
                "exact {} vs oracle {} (na={na}, nb={nb}, dim={dim})",
                exact.squared_cost,
                oracle.squared_cost
            );
            plan_marginals_ok(&exact, na, nb);
            count += 1;
        }
        assert_eq!(count, 200);
    }

    #[test]
    fn one_dim_path_matches_simplex_path() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..30 {
            let na = rng.gen_range(2..=12);
            let nb = rng.gen_range(2..=12);
            let a = random_cloud(&mut rng, na, 1);
            let b = random_cloud(&mut rng, nb, 1);
            let fast = one_dim_monotone(&a, &b, false);
            let (cost, _) = simplex::solve(a.points(), b.points(), false).unwrap();
            assert!((fast.squared_cost - cost).abs() < 1e-10);
        }
    }

    #[test]
    fn metric_axioms_on_random_clouds() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        for _ in 0..100 {
            let n = rng.gen_range(2..=8);
            let a = random_cloud(&mut rng, n, 2);
            let b = random_cloud(&mut rng, n, 2);
            let c = random_cloud(&mut rng, n, 2);
            let dab = w2_exact(&a, &b).unwrap().distance;
            let dba = w2_exact(&b, &a).unwrap().distance;
            assert!((dab - dba).abs() < 1e-12);
            let dac = w2_exact(&a, &c).unwrap().distance;
            let dcb = w2_exact(&c, &b).unwrap().distance;
            assert!(dab <= dac + dcb + 1e-9);
        }
    }

    #[test]
    fn identity_of_indiscernibles() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let a = random_cloud(&mut rng, 6, 2);
        // Shuffled copy is the same multiset: distance 0.
        let perm = [3usize, 1, 5, 0, 4, 2];
        let shuffled = PointCloud::new(DMatrix::from_fn(6, 2, |i, j| a.points()[(perm[i], j)])).unwrap();
        assert!(w2_exact(&a, &shuffled).unwrap().distance < 1e-12);

        let b = random_cloud(&mut rng, 6, 2);
        let d = w2_exact(&a, &b).unwrap().distance;
        assert!(d > 1e-6); // distinct random clouds are far apart
    }

    #[test]
    fn translation_behavior() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let a = random_cloud(&mut rng, 7, 2);
        let b = random_cloud(&mut rng, 7, 2);
        let v = DVector::from_vec(vec![0.75, -1.25]);
        let d = w2_exact(&a, &b).unwrap().distance;
        let d_shifted = w2_exact(&a.translate(&v).unwrap(), &b.translate(&v).unwrap()).unwrap().distance;
        assert!((d - d_shifted).abs() < 1e-10);

        // Shifting one copy of a cloud by v moves the distance to exactly ‖v‖.
        let d_self = w2_exact(&a, &a.translate(&v).unwrap()).unwrap().distance;
        assert_abs_diff_eq!(d_self, v.norm(), epsilon = 1e-10);
    }

    #[test]
    fn scaling_behavior() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let a = random_cloud(&mut rng, 6, 2);
        let b = random_cloud(&mut rng, 6, 2);
        let s = 3.5;
        let scale = |c: &PointCloud| PointCloud::new(c.points() * s).unwrap();
        let d = w2_exact(&a, &b).unwrap().distance;
        let ds = w2_exact(&scale(&a), &scale(&b)).unwrap().distance;
        assert!((ds - s * d).abs() < 1e-10);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = PointCloud::from_rows(&[vec![0.0, 1.0]]).unwrap();
        let b = PointCloud::from_rows(&[vec![0.0]]).unwrap();
        assert!(matches!(w2_exact(&a, &b), Err(Error::DimensionMismatch(_))));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn cloud_strategy(n: std::ops::RangeInclusive<usize>, dim: usize) -> impl Strategy<Value = PointCloud> {
            n.prop_flat_map(move |count| {
                proptest::collection::vec(-3.0..3.0f64, count * dim)
                    .prop_map(move |v| PointCloud::new(DMatrix::from_vec(count, dim, v)).unwrap())
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn solver_matches_enumeration_oracle(
                a in cloud_strategy(2..=4, 2),
                b in cloud_strategy(2..=3, 2),
            ) {
                let exact = w2_exact(&a, &b).unwrap();
                let oracle = w2_bruteforce(&a, &b).unwrap();
                prop_assert!((exact.squared_cost - oracle.squared_cost).abs() < 1e-9);
            }

            #[test]
            fn one_dim_fast_path_matches_simplex(
                a in cloud_strategy(2..=10, 1),
                b in cloud_strategy(2..=10, 1),
            ) {
                let fast = one_dim_monotone(&a, &b, false);
                let (cost, _) = simplex::solve(a.points(), b.points(), false).unwrap();
                prop_assert!((fast.squared_cost - cost).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn moderate_unequal_sizes_agree_with_one_dim_reference() {
        // 2-D solver against the 1-D fast path by embedding on a line.
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        for _ in 0..5 {
            let na = rng.gen_range(20..=50);
            let nb = rng.gen_range(20..=50);
            let xs_a: Vec<f64> = (0..na).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let xs_b: Vec<f64> = (0..nb).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let a1 = PointCloud::new(DMatrix::from_fn(na, 1, |i, _| xs_a[i])).unwrap();
            let b1 = PointCloud::new(DMatrix::from_fn(nb, 1, |i, _| xs_b[i])).unwrap();
            // Embed into 2-D along a rotated direction.
            let (c, s) = (0.6, 0.8);
            let a2 = PointCloud::new(DMatrix::from_fn(na, 2, |i, j| if j == 0 { c * xs_a[i] } else { s * xs_a[i] })).unwrap();
            let b2 = PointCloud::new(DMatrix::from_fn(nb, 2, |i, j| if j == 0 { c * xs_b[i] } else { s * xs_b[i] })).unwrap();
            let d1 = w2_exact(&a1, &b1).unwrap().distance;
            let d2 = w2_exact(&a2, &b2).unwrap().distance;
            assert!((d1 - d2).abs() < 1e-9, "line {d1} vs embedded {d2}");
        }
    }
}
