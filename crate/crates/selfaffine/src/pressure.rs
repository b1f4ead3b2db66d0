//! Partition sums over the word tree, projected pressure estimation,
//! dimension root-finding, and pressure curves.
//!
//! The enumeration engine is deterministic down to the bit: depth-first
//! lexicographic order, compensated log-space summation, and prefix shards
//! whose results merge in a fixed order independent of worker count.

use crate::error::{Error, Result};
use crate::ifs::{check_word, contraction_report, IfsSystem};
use crate::linalg::{self, log_svf_raw, Matrix};
use rayon::prelude::*;
use std::f64::consts::LN_2;

/// Default cap on total word-tree nodes visited per enumeration.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// Default bisection tolerance on s for dimension root-finding.
pub const DEFAULT_DIM_TOL: f64 = 1e-4;

/// Running products are renormalized by an exact power of two whenever the
/// largest entry magnitude leaves [2^-400, 2^400].
const RESCALE_EXP: i64 = 400;

/// Largest shard-root count for the parallel phase of an enumeration.
const MAX_SHARDS: u128 = 4096;

/// Longest shard prefix; beyond this, subtree work per shard is already
/// small enough for balance.
const MAX_PREFIX: usize = 6;

/// A d-dimensional endomorphism used as a projection, with its numeric rank.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMap {
    matrix: Matrix,
    rank: usize,
}

impl ProjectionMap {
    /// Wrap a square matrix; the zero map (rank 0) is rejected.
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::invalid("projection matrix must be square"));
        }
        let rank = linalg::singular_values(&matrix)?.rank();
        if rank == 0 {
            return Err(Error::invalid("projection must have rank at least 1"));
        }
        Ok(ProjectionMap { matrix, rank })
    }

    pub fn identity(d: usize) -> Self {
        ProjectionMap {
            matrix: Matrix::identity(d),
            rank: d,
        }
    }

    /// Orthogonal projection onto the first `k` coordinates of d-space.
    pub fn coord(d: usize, k: usize) -> Result<Self> {
        if k == 0 || k > d {
            return Err(Error::invalid(format!("coordinate count {k} outside 1..={d}")));
        }
        let mut values = vec![0.0; d];
        for v in values.iter_mut().take(k) {
            *v = 1.0;
        }
        Ok(ProjectionMap {
            matrix: Matrix::diag(&values),
            rank: k,
        })
    }

    /// The block map `(u, v) -> (u + v, 0)` on pairs of `half`-vectors.
    pub fn sum_block(half: usize) -> Result<Self> {
        if half == 0 {
            return Err(Error::invalid("block size must be positive"));
        }
        let d = 2 * half;
        let mut m = Matrix::zeros(d, d);
        for i in 0..half {
            m.set(i, i, 1.0);
            m.set(i, half + i, 1.0);
        }
        ProjectionMap::new(m)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dimension(&self) -> usize {
        self.matrix.rows()
    }

    pub fn top_singular_value(&self) -> f64 {
        self.matrix.op_norm()
    }
}

/// Per-depth record of log partition sums with the difference-quotient
/// pressure estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureEstimate {
    pub s: f64,
    pub depths: Vec<usize>,
    pub log_sums: Vec<f64>,
    pub per_n: Vec<f64>,
    /// Primary estimate: last log-sum increment.
    pub diff_quotient: f64,
    /// Min over n of per_n; a true upper bound only for full-rank
    /// projections, where the projected potential is submultiplicative
    /// with constant 1. Absent otherwise.
    pub rigorous_upper: Option<f64>,
}

/// Dimension root-finding result.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionEstimate {
    pub s_star: f64,
    pub bracket: (f64, f64),
    pub pressure_at_root: f64,
    /// True when the depth-n pressure is still positive at s = rank.
    pub saturated: bool,
}

/// Sublevel check: is the depth-n pressure at most `t`?
#[derive(Debug, Clone, PartialEq)]
pub struct SublevelMembership {
    pub member: bool,
    /// `t` minus the depth-n pressure value.
    pub margin: f64,
}

// ---------------------------------------------------------------------------
// deterministic log-space accumulation

/// Streaming log-sum-exp with Neumaier compensation: accumulates
/// log(sum of exp(l_i)) without overflow, deterministically in push order.
#[derive(Debug, Clone)]
struct LogAccumulator {
    max_log: f64,
    sum: f64,
    comp: f64,
}

impl LogAccumulator {
    fn new() -> Self {
        LogAccumulator {
            max_log: f64::NEG_INFINITY,
            sum: 0.0,
            comp: 0.0,
        }
    }

    #[inline]
    fn kahan_add(&mut self, y: f64) {
        let t = self.sum + y;
        if self.sum.abs() >= y.abs() {
            self.comp += (self.sum - t) + y;
        } else {
            self.comp += (y - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    fn push(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return; // zero term
        }
        if log_term <= self.max_log {
            self.kahan_add((log_term - self.max_log).exp());
        } else {
            let f = (self.max_log - log_term).exp();
            self.sum *= f;
            self.comp *= f;
            self.max_log = log_term;
            self.kahan_add(1.0);
        }
    }

    fn merge(&mut self, other: &LogAccumulator) {
        if other.max_log == f64::NEG_INFINITY {
            return;
        }
        if other.max_log <= self.max_log {
            let f = (other.max_log - self.max_log).exp();
            self.kahan_add(other.sum * f);
            self.kahan_add(other.comp * f);
        } else {
            let f = (self.max_log - other.max_log).exp();
            self.sum *= f;
            self.comp *= f;
            self.max_log = other.max_log;
            self.kahan_add(other.sum);
            self.kahan_add(other.comp);
        }
    }

    fn value(&self) -> f64 {
        let total = self.sum + self.comp;
        if total > 0.0 {
            self.max_log + total.ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Exact power of two as f64, split to stay in the normal range.
#[inline]
fn pow2(k: i64) -> f64 {
    let k1 = (k / 2) as i32;
    let k2 = (k - (k1 as i64)) as i32;
    2.0f64.powi(k1) * 2.0f64.powi(k2)
}

/// Recenter `buf` by an exact power of two when its largest entry leaves
/// [2^-400, 2^400]; `e` tracks the shed exponent (matrix = buf * 2^e).
#[inline]
fn rescale(buf: &mut [f64], e: &mut i64) {
    let mut m = 0.0f64;
    for &x in buf.iter() {
        m = m.max(x.abs());
    }
    if m == 0.0 {
        return;
    }
    let k = m.log2().round() as i64;
    if k.abs() > RESCALE_EXP {
        let f = pow2(-k);
        for x in buf.iter_mut() {
            *x *= f;
        }
        *e += k;
    }
}

#[inline]
fn max_abs(buf: &[f64]) -> f64 {
    buf.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

// ---------------------------------------------------------------------------
// word-tree enumeration engine

/// Total nodes in the word tree at depths 1..=n_max, saturating.
fn tree_nodes(n_letters: usize, n_max: usize) -> u128 {
    let mut total: u128 = 0;
    let mut level: u128 = 1;
    for _ in 0..n_max {
        level = level.saturating_mul(n_letters as u128);
        total = total.saturating_add(level);
    }
    total
}

pub(crate) fn check_budget(n_letters: usize, n_max: usize, budget: u64) -> Result<()> {
    let total = tree_nodes(n_letters, n_max);
    if total > budget as u128 {
        let mut feasible = 0;
        for n in 1..=n_max {
            if tree_nodes(n_letters, n) <= budget as u128 {
                feasible = n;
            } else {
                break;
            }
        }
        return Err(Error::Budget {
            requested_n: n_max,
            requested_leaves: total,
            budget,
            max_feasible_n: feasible,
        });
    }
    Ok(())
}

struct Walk<'a> {
    linears: Vec<&'a [f64]>,
    d: usize,
    n_min: usize,
    n_max: usize,
    s_values: &'a [f64],
}

/// Accumulator grid: [depth - n_min][s index].
type Grid = Vec<Vec<LogAccumulator>>;

impl<'a> Walk<'a> {
    fn new_grid(&self) -> Grid {
        let depths = self.n_max + 1 - self.n_min;
        (0..depths)
            .map(|_| (0..self.s_values.len()).map(|_| LogAccumulator::new()).collect())
            .collect()
    }

    /// Add the contribution of a node at `depth` with scaled product
    /// `buf * 2^e` to the grid.
    fn contribute(
        &self,
        grid: &mut Grid,
        depth: usize,
        buf: &[f64],
        e: i64,
        svd: &mut [f64],
        sv: &mut [f64],
    ) {
        svd.copy_from_slice(buf);
        linalg::jacobi_singular_values(svd, self.d, self.d, sv);
        let e_ln2 = e as f64 * LN_2;
        for (si, &s) in self.s_values.iter().enumerate() {
            let log_term = log_svf_raw(sv, s) + s * e_ln2;
            grid[depth - self.n_min][si].push(log_term);
        }
    }

    /// Depth-first walk of the subtree below a node at `depth` carrying
    /// scaled product `buf * 2^e`; contributions recorded for depths in
    /// [n_min, n_max]. `stack` holds one working buffer per remaining level.
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        &self,
        grid: &mut Grid,
        depth: usize,
        buf: &[f64],
        e: i64,
        stack: &mut [Vec<f64>],
        svd: &mut [f64],
        sv: &mut [f64],
    ) {
        let (child, rest) = stack.split_first_mut().expect("stack sized to tree depth");
        for letter in 0..self.linears.len() {
            linalg::matmul_into(child, buf, self.linears[letter], self.d);
            let mut e_child = e;
            rescale(child, &mut e_child);
            if max_abs(child) == 0.0 {
                continue; // zero product: contributes nothing at any depth
            }
            let next = depth + 1;
            if next >= self.n_min {
                self.contribute(grid, next, child, e_child, svd, sv);
            }
            if next < self.n_max {
                self.dfs(grid, next, child, e_child, rest, svd, sv);
            }
        }
    }
}

/// Log partition sums `log sum over |w| = n of svf(Q * A_w, s)` for every
/// depth in `n_min..=n_max` and every s in `s_values`.
///
/// Returns `out[depth - n_min][s_index]`. Deterministic and independent of
/// the rayon worker count.
pub(crate) fn log_partition_sums(
    sys: &IfsSystem,
    q: &Matrix,
    s_values: &[f64],
    n_min: usize,
    n_max: usize,
    budget: u64,
) -> Result<Vec<Vec<f64>>> {
    if n_min == 0 || n_min > n_max {
        return Err(Error::invalid("need 1 <= n_min <= n_max"));
    }
    let d = sys.dimension();
    if q.rows() != d || q.cols() != d {
        return Err(Error::invalid("projection dimension does not match system"));
    }
    let dmax = d as f64;
    if s_values.iter().any(|&s| !(0.0..=dmax).contains(&s)) {
        return Err(Error::domain(format!("s values must lie in [0, {dmax}]")));
    }
    check_budget(sys.len(), n_max, budget)?;

    let walk = Walk {
        linears: sys.maps().iter().map(|m| m.linear().entries()).collect(),
        d,
        n_min,
        n_max,
        s_values,
    };

    // shard prefix depth: enough shards for balance, never more than MAX_SHARDS
    let n_letters = sys.len();
    let mut prefix = 0usize;
    while prefix < n_max.min(MAX_PREFIX)
        && (n_letters as u128).pow(prefix as u32 + 1) <= MAX_SHARDS
    {
        prefix += 1;
    }

    let mut grid = walk.new_grid();
    let mut svd = vec![0.0; d * d];
    let mut sv = vec![0.0; d];

    // serial walk of the prefix levels, collecting shard roots at depth `prefix`
    let mut roots: Vec<(Vec<f64>, i64)> = Vec::new();
    {
        let mut stack: Vec<(usize, Vec<f64>, i64)> = vec![(0, q.entries().to_vec(), 0)];
        // iterative DFS in lexicographic order: children pushed in reverse
        while let Some((depth, buf, e)) = stack.pop() {
            if depth > 0 && depth >= n_min {
                walk.contribute(&mut grid, depth, &buf, e, &mut svd, &mut sv);
            }
            if depth == prefix {
                if prefix < n_max {
                    roots.push((buf, e));
                }
                continue;
            }
            for letter in (0..n_letters).rev() {
                let mut child = vec![0.0; d * d];
                linalg::matmul_into(&mut child, &buf, walk.linears[letter], d);
                let mut e_child = e;
                rescale(&mut child, &mut e_child);
                if max_abs(&child) == 0.0 {
                    continue;
                }
                stack.push((depth + 1, child, e_child));
            }
        }
    }
    // the reversed pushes above emit shard roots in lexicographic order

    if !roots.is_empty() {
        let levels = n_max - prefix;
        let shard_grids: Vec<Grid> = roots
            .par_iter()
            .map(|(buf, e)| {
                let mut local = walk.new_grid();
                let mut stack: Vec<Vec<f64>> = (0..levels).map(|_| vec![0.0; d * d]).collect();
                let mut svd = vec![0.0; d * d];
                let mut sv = vec![0.0; d];
                walk.dfs(&mut local, prefix, buf, *e, &mut stack, &mut svd, &mut sv);
                local
            })
            .collect();
        // fixed merge order: shard by shard, lexicographic
        for shard in &shard_grids {
            for (row, local_row) in grid.iter_mut().zip(shard) {
                for (acc, local_acc) in row.iter_mut().zip(local_row) {
                    acc.merge(local_acc);
                }
            }
        }
    }

    Ok(grid
        .into_iter()
        .map(|row| row.into_iter().map(|a| a.value()).collect())
        .collect())
}

/// Singular values of `Q * A_w` (or `A_w` when `q` is `None`) for one word,
/// with the power-of-two exponent shed during accumulation: the true
/// spectrum is `values * 2^e`.
pub(crate) fn word_spectrum(
    sys: &IfsSystem,
    q: Option<&Matrix>,
    w: &[usize],
) -> Result<(Vec<f64>, i64)> {
    check_word(sys, w)?;
    let d = sys.dimension();
    if let Some(q) = q {
        if q.rows() != d || q.cols() != d {
            return Err(Error::invalid("projection dimension does not match system"));
        }
    }
    let mut buf = match q {
        Some(q) => q.entries().to_vec(),
        None => Matrix::identity(d).entries().to_vec(),
    };
    let mut e: i64 = 0;
    let mut next = vec![0.0; d * d];
    for &letter in w {
        linalg::matmul_into(&mut next, &buf, sys.map(letter).linear().entries(), d);
        std::mem::swap(&mut buf, &mut next);
        rescale(&mut buf, &mut e);
    }
    let mut sv = vec![0.0; d];
    linalg::jacobi_singular_values(&mut buf, d, d, &mut sv);
    Ok((sv, e))
}

// ---------------------------------------------------------------------------
// public operations

fn check_s(q: &ProjectionMap, s: f64) -> Result<()> {
    let r = q.rank() as f64;
    if !(0.0..=r).contains(&s) {
        return Err(Error::domain(format!(
            "s = {s} outside [0, {r}] for a rank-{} projection",
            q.rank()
        )));
    }
    Ok(())
}

/// Partition sum at one depth: `sum over |w| = n of svf(Q * A_w, s)`.
///
/// May overflow to infinity for large values; [`pressure`] works in
/// log-space and does not.
pub fn partition_sum(sys: &IfsSystem, q: &ProjectionMap, s: f64, n: usize) -> Result<f64> {
    partition_sum_budgeted(sys, q, s, n, DEFAULT_BUDGET)
}

/// [`partition_sum`] with an explicit node budget.
pub fn partition_sum_budgeted(
    sys: &IfsSystem,
    q: &ProjectionMap,
    s: f64,
    n: usize,
    budget: u64,
) -> Result<f64> {
    Ok(log_partition_sum_budgeted(sys, q, s, n, budget)?.exp())
}

/// Log of the partition sum at one depth.
pub fn log_partition_sum(sys: &IfsSystem, q: &ProjectionMap, s: f64, n: usize) -> Result<f64> {
    log_partition_sum_budgeted(sys, q, s, n, DEFAULT_BUDGET)
}

/// [`log_partition_sum`] with an explicit node budget.
pub fn log_partition_sum_budgeted(
    sys: &IfsSystem,
    q: &ProjectionMap,
    s: f64,
    n: usize,
    budget: u64,
) -> Result<f64> {
    check_s(q, s)?;
    let sums = log_partition_sums(sys, q.matrix(), &[s], n, n, budget)?;
    Ok(sums[0][0])
}

/// Estimate the projected pressure at `s` from depths `n_min..=n_max`.
///
/// The primary estimate is the difference quotient of the last two log
/// partition sums. For full-rank projections the minimum of the per-depth
/// averages is also reported; it is a true upper bound by exact
/// submultiplicativity. For rank-deficient projections no rigorous bound
/// is claimed.
pub fn pressure(
    sys: &IfsSystem,
    q: &ProjectionMap,
    s: f64,
    n_min: usize,
    n_max: usize,
) -> Result<PressureEstimate> {
    pressure_budgeted(sys, q, s, n_min, n_max, DEFAULT_BUDGET)
}

/// [`pressure`] with an explicit node budget.
pub fn pressure_budgeted(
    sys: &IfsSystem,
    q: &ProjectionMap,
    s: f64,
    n_min: usize,
    n_max: usize,
    budget: u64,
) -> Result<PressureEstimate> {
    check_s(q, s)?;
    let sums = log_partition_sums(sys, q.matrix(), &[s], n_min, n_max, budget)?;
    let depths: Vec<usize> = (n_min..=n_max).collect();
    let log_sums: Vec<f64> = sums.into_iter().map(|row| row[0]).collect();
    let per_n: Vec<f64> = depths
        .iter()
        .zip(&log_sums)
        .map(|(&n, &l)| l / n as f64)
        .collect();
    let diff_quotient = if log_sums.len() >= 2 {
        log_sums[log_sums.len() - 1] - log_sums[log_sums.len() - 2]
    } else {
        per_n[per_n.len() - 1]
    };
    let rigorous_upper = if q.rank() == q.dimension() {
        Some(per_n.iter().cloned().fold(f64::INFINITY, f64::min))
    } else {
        None
    };
    Ok(PressureEstimate {
        s,
        depths,
        log_sums,
        per_n,
        diff_quotient,
        rigorous_upper,
    })
}

/// Depth-n pressure approximant on a grid of s values, evaluated in one
/// pass over the word tree. Output order matches the grid order.
pub fn pressure_curve(
    sys: &IfsSystem,
    q: &ProjectionMap,
    s_grid: &[f64],
    n: usize,
) -> Result<Vec<(f64, f64)>> {
    pressure_curve_budgeted(sys, q, s_grid, n, DEFAULT_BUDGET)
}

/// [`pressure_curve`] with an explicit node budget.
pub fn pressure_curve_budgeted(
    sys: &IfsSystem,
    q: &ProjectionMap,
    s_grid: &[f64],
    n: usize,
    budget: u64,
) -> Result<Vec<(f64, f64)>> {
    for &s in s_grid {
        check_s(q, s)?;
    }
    if s_grid.is_empty() {
        return Ok(Vec::new());
    }
    let sums = log_partition_sums(sys, q.matrix(), s_grid, n, n, budget)?;
    Ok(s_grid
        .iter()
        .zip(&sums[0])
        .map(|(&s, &l)| (s, l / n as f64))
        .collect())
}

/// The slope bound for the depth-n pressure in s:
/// `kappa = max over maps of max(|log sigma_1|, |log sigma_d|)`.
pub fn lipschitz_bound(sys: &IfsSystem) -> Result<f64> {
    let mut kappa = 0.0f64;
    for m in sys.maps() {
        let sv = linalg::singular_values(m.linear())?;
        let top = sv.values()[0];
        let bot = sv.values()[sv.values().len() - 1];
        if bot <= 0.0 {
            return Err(Error::invalid("singular linear part"));
        }
        kappa = kappa.max(top.ln().abs()).max(bot.ln().abs());
    }
    Ok(kappa)
}

/// Smallest depth at which every word's projected singular value function
/// is strictly less than 1 for all s > 0, making the depth-n pressure
/// approximant strictly decreasing in s. Requires a contracting system.
pub fn min_root_depth(sys: &IfsSystem, q: &ProjectionMap) -> Result<usize> {
    let report = contraction_report(sys);
    if !report.contracting {
        return Err(Error::contraction(format!(
            "max operator norm {} is not < 1",
            report.max_norm
        )));
    }
    let top_q = q.top_singular_value();
    if top_q <= 1.0 {
        return Ok(1);
    }
    let t = top_q.ln() / (1.0 / report.max_norm).ln();
    Ok((t.ceil() as usize + 1).max(1))
}

/// Root of the depth-n pressure approximant in s on [0, rank Q], by
/// bisection; the projected affinity dimension estimate at depth n.
///
/// Saturates at s = rank Q when the approximant is still positive there.
pub fn dim_aff_q(
    sys: &IfsSystem,
    q: &ProjectionMap,
    n: usize,
    tol: f64,
) -> Result<DimensionEstimate> {
    dim_aff_q_budgeted(sys, q, n, tol, DEFAULT_BUDGET)
}

/// [`dim_aff_q`] with an explicit node budget.
pub fn dim_aff_q_budgeted(
    sys: &IfsSystem,
    q: &ProjectionMap,
    n: usize,
    tol: f64,
    budget: u64,
) -> Result<DimensionEstimate> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let min_depth = min_root_depth(sys, q)?;
    if n < min_depth {
        return Err(Error::domain(format!(
            "depth {n} too small for a strictly decreasing approximant; need n >= {min_depth}"
        )));
    }
    let eval = |s: f64| -> Result<f64> {
        let sums = log_partition_sums(sys, q.matrix(), &[s], n, n, budget)?;
        Ok(sums[0][0] / n as f64)
    };
    let rank = q.rank() as f64;
    let at_zero = eval(0.0)?;
    if at_zero <= 0.0 {
        // single-map systems: log N = 0, the root sits at s = 0
        return Ok(DimensionEstimate {
            s_star: 0.0,
            bracket: (0.0, 0.0),
            pressure_at_root: at_zero,
            saturated: false,
        });
    }
    let at_rank = eval(rank)?;
    if at_rank > 0.0 {
        return Ok(DimensionEstimate {
            s_star: rank,
            bracket: (rank, rank),
            pressure_at_root: at_rank,
            saturated: true,
        });
    }
    let (mut lo, mut hi) = (0.0f64, rank);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s_star = 0.5 * (lo + hi);
    Ok(DimensionEstimate {
        s_star,
        bracket: (lo, hi),
        pressure_at_root: eval(s_star)?,
        saturated: false,
    })
}

/// Whether the depth-n pressure approximant at `s` is at most `t`, with the
/// margin `t - value`. A numeric proxy for sublevel-set membership, not an
/// algebraic decision.
pub fn sublevel_membership(
    sys: &IfsSystem,
    s: f64,
    t: f64,
    q: &ProjectionMap,
    n: usize,
) -> Result<SublevelMembership> {
    check_s(q, s)?;
    let sums = log_partition_sums(sys, q.matrix(), &[s], n, n, DEFAULT_BUDGET)?;
    let value = sums[0][0] / n as f64;
    Ok(SublevelMembership {
        member: value <= t,
        margin: t - value,
    })
}
