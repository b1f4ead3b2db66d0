//! Constructors for structured system families: generalized permutation
//! systems, Kronecker (tensor) systems, and the direct-sum construction
//! used to compare the dimension of a sumset against its parts. Includes
//! two frozen demo instances with closed-form reference values.

use crate::error::{Error, Result};
use crate::ifs::{contraction_report, AffineMap, IfsSystem};
use crate::linalg::{singular_values, Matrix};
use crate::measures::MarkovWordSource;
use crate::pressure::{self, DimensionEstimate, ProjectionMap, DEFAULT_BUDGET};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Condition number cap for tensor factor resampling.
const TENSOR_COND_CAP: f64 = 100.0;

/// Attempts before tensor factor sampling gives up.
const TENSOR_MAX_TRIES: usize = 1000;

/// Bisection width for factor dimensions inside the sumset constructor.
const SUMSET_DIM_TOL: f64 = 1e-6;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn random_translation(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn random_permutation(rng: &mut ChaCha8Rng, d: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        let j = rng.gen_range(0..=i);
        p.swap(i, j);
    }
    p
}

/// Random generalized permutation system: each linear part has exactly one
/// nonzero entry per row and column, with magnitude in
/// [entry_low, entry_high] and random sign. The first map always carries
/// the identity pattern and the second a non-identity pattern.
pub fn gen_perm_example(
    d: usize,
    entry_low: f64,
    entry_high: f64,
    n_maps: usize,
    seed: u64,
) -> Result<IfsSystem> {
    if d < 2 {
        return Err(Error::invalid("need dimension at least 2 for a non-identity pattern"));
    }
    if n_maps < 2 {
        return Err(Error::invalid("need at least 2 maps"));
    }
    if !(entry_low > 0.0 && entry_low <= entry_high && entry_high < 0.5) {
        return Err(Error::invalid("need 0 < entry_low <= entry_high < 1/2"));
    }
    let mut rng = rng_for(seed, 0);
    let mut maps = Vec::with_capacity(n_maps);
    for k in 0..n_maps {
        let perm = if k == 0 {
            (0..d).collect()
        } else if k == 1 {
            loop {
                let p = random_permutation(&mut rng, d);
                if p.iter().enumerate().any(|(i, &pi)| i != pi) {
                    break p;
                }
            }
        } else {
            random_permutation(&mut rng, d)
        };
        let mut linear = Matrix::zeros(d, d);
        for (row, &col) in perm.iter().enumerate() {
            let magnitude = rng.gen_range(entry_low..=entry_high);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            linear.set(row, col, sign * magnitude);
        }
        let translation = random_translation(&mut rng, d);
        maps.push(AffineMap::new(linear, translation)?);
    }
    IfsSystem::new(maps)
}

/// The frozen planar generalized permutation demo: one diagonal map, one
/// antidiagonal map, and a two-state word source whose hidden state tracks
/// the row permutation applied so far. Under the first-coordinate
/// projection, orbit scaling rates split into two clusters with
/// closed-form means and weights.
#[derive(Debug, Clone)]
pub struct GenPermDemo {
    pub system: IfsSystem,
    pub source: MarkovWordSource,
}

pub fn gen_perm_demo() -> GenPermDemo {
    let m0 = Matrix::from_rows(&[&[0.45, 0.0], &[0.0, -0.04]]).expect("frozen matrix");
    let m1 = Matrix::from_rows(&[&[0.0, 0.40], &[-0.04, 0.0]]).expect("frozen matrix");
    let maps = vec![
        AffineMap::new(m0, vec![0.1, -0.35]).expect("frozen map"),
        AffineMap::new(m1, vec![-0.6, 0.2]).expect("frozen map"),
    ];
    let system = IfsSystem::new(maps).expect("frozen system");
    // hidden state = row index currently feeding the projected entry;
    // letter 1 carries the antidiagonal pattern and flips it. The initial
    // distribution is the stationary law of the induced state chain.
    let source = MarkovWordSource::new(
        vec![5.0 / 6.0, 1.0 / 6.0],
        vec![vec![0.85, 0.15], vec![0.25, 0.75]],
        vec![vec![0, 1], vec![1, 0]],
    )
    .expect("frozen source");
    GenPermDemo { system, source }
}

impl GenPermDemo {
    /// Projection onto the first coordinate.
    pub fn projection(&self) -> ProjectionMap {
        ProjectionMap::coord(2, 1).expect("rank-1 coordinate projection")
    }

    /// Exact expected per-letter rates of (1/n) log of the projected word
    /// product norm, one per starting phase, with their probabilities.
    /// Returns (means ascending, matching weights).
    pub fn expected_rates(&self, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if n == 0 {
            return Err(Error::invalid("need a positive word length"));
        }
        // entry_table[letter][row] = the single nonzero entry in that row
        let mut entry_table = Vec::new();
        for map in self.system.maps() {
            let m = map.linear();
            let mut per_row = Vec::new();
            for r in 0..2 {
                let vals: Vec<f64> = (0..2).map(|c| m.get(r, c)).filter(|v| *v != 0.0).collect();
                if vals.len() != 1 {
                    return Err(Error::degenerate("demo maps must have one entry per row"));
                }
                per_row.push(vals[0]);
            }
            entry_table.push(per_row);
        }
        // phase 0: the tracked row agrees with the hidden state every step;
        // phase 1: it is the opposite row every step
        let inc = |phase: usize, m: usize| -> f64 {
            (0..2)
                .map(|i| self.source.emission(m)[i] * entry_table[i][m ^ phase].abs().ln())
                .sum()
        };
        let p = self.source.state_transition();
        let mut rates = Vec::new();
        for phase in 0..2 {
            let mut dist = vec![0.0, 0.0];
            dist[phase] = 1.0;
            let mut total = 0.0;
            for _ in 0..n {
                total += dist[0] * inc(phase, 0) + dist[1] * inc(phase, 1);
                dist = vec![
                    dist[0] * p[0][0] + dist[1] * p[1][0],
                    dist[0] * p[0][1] + dist[1] * p[1][1],
                ];
            }
            rates.push(total / n as f64);
        }
        let mut pairs: Vec<(f64, f64)> = rates
            .iter()
            .zip(self.source.init())
            .map(|(&r, &w)| (r, w))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok((
            pairs.iter().map(|p| p.0).collect(),
            pairs.iter().map(|p| p.1).collect(),
        ))
    }
}

impl Default for GenPermDemo {
    fn default() -> Self {
        gen_perm_demo()
    }
}

fn sample_unit_norm_factor(rng: &mut ChaCha8Rng, d: usize) -> Result<Matrix> {
    for _ in 0..TENSOR_MAX_TRIES {
        let data: Vec<f64> = (0..d * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = Matrix::new(d, d, data)?;
        let sv = singular_values(&m)?;
        let top = sv.values()[0];
        let bottom = sv.values()[d - 1];
        if bottom > 0.0 && top / bottom < TENSOR_COND_CAP {
            return Ok(m.scale(1.0 / top));
        }
    }
    Err(Error::degenerate(
        "could not sample a well-conditioned tensor factor",
    ))
}

/// Random Kronecker-product system together with its factor pairs: each
/// linear part is scale * (g x h) with g, h random invertible matrices of
/// condition number below 100, normalized to unit operator norm so the
/// map's norm is exactly `scale`.
pub fn tensor_example_parts(
    d1: usize,
    d2: usize,
    n_maps: usize,
    scale: f64,
    seed: u64,
) -> Result<(IfsSystem, Vec<(Matrix, Matrix)>)> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::invalid("factor dimensions must be positive"));
    }
    if n_maps == 0 {
        return Err(Error::invalid("need at least one map"));
    }
    if !(scale > 0.0 && scale < 0.5) {
        return Err(Error::invalid("need 0 < scale < 1/2 for contraction"));
    }
    let mut rng = rng_for(seed, 0);
    let mut maps = Vec::with_capacity(n_maps);
    let mut parts = Vec::with_capacity(n_maps);
    for _ in 0..n_maps {
        let g = sample_unit_norm_factor(&mut rng, d1)?;
        let h = sample_unit_norm_factor(&mut rng, d2)?;
        let linear = g.kron(&h).scale(scale);
        let translation = random_translation(&mut rng, d1 * d2);
        maps.push(AffineMap::new(linear, translation)?);
        parts.push((g.scale(scale), h));
    }
    Ok((IfsSystem::new(maps)?, parts))
}

/// As [`tensor_example_parts`], returning only the system.
pub fn tensor_example(
    d1: usize,
    d2: usize,
    n_maps: usize,
    scale: f64,
    seed: u64,
) -> Result<IfsSystem> {
    tensor_example_parts(d1, d2, n_maps, scale, seed).map(|(sys, _)| sys)
}

fn block_diag(a: &Matrix, b: &Matrix) -> Matrix {
    let (da, db) = (a.rows(), b.rows());
    let mut m = Matrix::zeros(da + db, da + db);
    for i in 0..da {
        for j in 0..da {
            m.set(i, j, a.get(i, j));
        }
    }
    for i in 0..db {
        for j in 0..db {
            m.set(da + i, da + j, b.get(i, j));
        }
    }
    m
}

/// Two tensor-built systems, their direct-sum product system, and the
/// coordinate-sum projection under which the product attractor projects to
/// the sumset of the two attractors.
#[derive(Debug, Clone)]
pub struct SumsetSystem {
    factor_a: IfsSystem,
    factor_b: IfsSystem,
    a_left: Vec<Matrix>,
    b_right: Vec<Matrix>,
    product: IfsSystem,
    q_sum: ProjectionMap,
    s_target: f64,
    dim_a: DimensionEstimate,
    dim_b: DimensionEstimate,
    d1: usize,
    d2: usize,
}

impl SumsetSystem {
    pub fn factor_a(&self) -> &IfsSystem {
        &self.factor_a
    }

    pub fn factor_b(&self) -> &IfsSystem {
        &self.factor_b
    }

    /// The direct-sum system on the doubled space.
    pub fn product(&self) -> &IfsSystem {
        &self.product
    }

    /// (u, v) -> u + v, padded with zero rows.
    pub fn q_sum(&self) -> &ProjectionMap {
        &self.q_sum
    }

    /// Sum of the factor dimension estimates.
    pub fn s_target(&self) -> f64 {
        self.s_target
    }

    pub fn dim_a(&self) -> &DimensionEstimate {
        &self.dim_a
    }

    pub fn dim_b(&self) -> &DimensionEstimate {
        &self.dim_b
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    /// First tensor factors of the A maps (with the scale folded in).
    pub fn a_left(&self) -> &[Matrix] {
        &self.a_left
    }

    /// Second tensor factors of the B maps.
    pub fn b_right(&self) -> &[Matrix] {
        &self.b_right
    }
}

/// Assemble a [`SumsetSystem`] from explicit tensor factor pairs. Each pair
/// (left, right) yields the linear part left x right; translations are
/// drawn as in the other example constructors. Factor dimensions are
/// estimated at depth `dim_depth` with the identity projection.
pub fn sumset_system(
    a_parts: &[(Matrix, Matrix)],
    b_parts: &[(Matrix, Matrix)],
    dim_depth: usize,
    seed: u64,
) -> Result<SumsetSystem> {
    if a_parts.is_empty() || b_parts.is_empty() {
        return Err(Error::invalid("both factors need at least one map"));
    }
    let d1 = a_parts[0].0.rows();
    let d2 = a_parts[0].1.rows();
    for (l, r) in a_parts.iter().chain(b_parts.iter()) {
        if l.rows() != l.cols() || r.rows() != r.cols() {
            return Err(Error::invalid("tensor factors must be square"));
        }
        if l.rows() != d1 || r.rows() != d2 {
            return Err(Error::invalid("all tensor factors must share one shape"));
        }
    }
    let d = d1 * d2;
    let build = |parts: &[(Matrix, Matrix)], stream: u64| -> Result<IfsSystem> {
        let mut rng = rng_for(seed, stream);
        let maps = parts
            .iter()
            .map(|(l, r)| AffineMap::new(l.kron(r), random_translation(&mut rng, d)))
            .collect::<Result<Vec<_>>>()?;
        IfsSystem::new(maps)
    };
    let factor_a = build(a_parts, 0)?;
    let factor_b = build(b_parts, 1)?;
    for (name, sys) in [("A", &factor_a), ("B", &factor_b)] {
        let report = contraction_report(sys);
        if !report.contracting {
            return Err(Error::contraction(format!(
                "factor {name} has a map of norm {} >= 1/2",
                report.max_norm
            )));
        }
    }
    let q_id = ProjectionMap::identity(d);
    let dim_a = pressure::dim_aff_q(&factor_a, &q_id, dim_depth, SUMSET_DIM_TOL)?;
    let dim_b = pressure::dim_aff_q(&factor_b, &q_id, dim_depth, SUMSET_DIM_TOL)?;
    let s_target = dim_a.s_star + dim_b.s_star;

    let mut product_maps = Vec::with_capacity(factor_a.len() * factor_b.len());
    for ma in factor_a.maps() {
        for mb in factor_b.maps() {
            let linear = block_diag(ma.linear(), mb.linear());
            let mut translation = ma.translation().to_vec();
            translation.extend_from_slice(mb.translation());
            product_maps.push(AffineMap::new(linear, translation)?);
        }
    }
    Ok(SumsetSystem {
        a_left: a_parts.iter().map(|(l, _)| l.clone()).collect(),
        b_right: b_parts.iter().map(|(_, r)| r.clone()).collect(),
        factor_a,
        factor_b,
        product: IfsSystem::new(product_maps)?,
        q_sum: ProjectionMap::sum_block(d)?,
        s_target,
        dim_a,
        dim_b,
        d1,
        d2,
    })
}

/// Smallest per-letter log gap between adjacent singular values k-1 and k
/// (1-indexed) over all length-n products of `mats`.
fn min_log_sv_gap(mats: &[Matrix], k: usize, n: usize) -> Result<f64> {
    let d = mats[0].rows();
    if k < 2 || k > d {
        return Err(Error::invalid(format!("need 2 <= k <= {d}, got {k}")));
    }
    pressure::check_budget(mats.len(), n, DEFAULT_BUDGET)?;
    // the gap is scale invariant, so products are renormalized freely to
    // dodge underflow on long words
    fn rec(mats: &[Matrix], prod: &Matrix, depth: usize, n: usize, k: usize, min: &mut f64) {
        if depth == n {
            if let Ok(sv) = singular_values(prod) {
                let v = sv.values();
                let gap = v[k - 2].ln() - v[k - 1].ln();
                if gap < *min {
                    *min = gap;
                }
            }
            return;
        }
        for m in mats {
            let mut next = prod.mul(m).expect("square factors");
            let top = next.entries().iter().fold(0.0f64, |a, x| a.max(x.abs()));
            if top < 1e-100 && top > 0.0 {
                next = next.scale(top.recip());
            }
            rec(mats, &next, depth + 1, n, k, min);
        }
    }
    let mut min = f64::INFINITY;
    rec(mats, &Matrix::identity(d), 0, n, k, &mut min);
    Ok(min / n as f64)
}

/// Outcome of the singular value gap domination test at one depth.
#[derive(Debug, Clone, PartialEq)]
pub struct DominationCheck {
    /// Worst per-letter log gap between singular values k1-1 and k1 over
    /// the first factors of the A maps.
    pub lhs1: f64,
    /// Same over the second factors of the B maps at k2.
    pub lhs2: f64,
    /// Depth-n pressure of the product system at s = d1 d2 - 1, divided by
    /// s_target - (d1 d2 - 1).
    pub rhs: f64,
    pub pass: bool,
}

/// Check the gap domination sufficient condition at depth n: both factor
/// gap rates must exceed the normalized product pressure.
pub fn domination_check(ss: &SumsetSystem, k1: usize, k2: usize, n: usize) -> Result<DominationCheck> {
    if n == 0 {
        return Err(Error::invalid("depth must be positive"));
    }
    if k1 < 2 || k1 > ss.d1 {
        return Err(Error::invalid(format!("need 2 <= k1 <= {}", ss.d1)));
    }
    if k2 < 2 || k2 > ss.d2 {
        return Err(Error::invalid(format!("need 2 <= k2 <= {}", ss.d2)));
    }
    let d = ss.d1 * ss.d2;
    let s_edge = (d - 1) as f64;
    if ss.s_target <= s_edge {
        return Err(Error::domain(format!(
            "combined dimension {} must exceed {s_edge} for the bound to apply",
            ss.s_target
        )));
    }
    let lhs1 = min_log_sv_gap(&ss.a_left, k1, n)?;
    let lhs2 = min_log_sv_gap(&ss.b_right, k2, n)?;
    let q_id = ProjectionMap::identity(2 * d);
    let n_min = n.saturating_sub(1).max(1);
    let est = pressure::pressure(&ss.product, &q_id, s_edge, n_min, n)?;
    let rhs = est.diff_quotient / (ss.s_target - s_edge);
    Ok(DominationCheck {
        lhs1,
        lhs2,
        rhs,
        pass: lhs1 > rhs && lhs2 > rhs,
    })
}

/// Projected pressure of the product system at the combined dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureDrop {
    /// Depth-n estimate of the pressure under the coordinate-sum
    /// projection at s = s_target.
    pub p_q_at_s: f64,
    /// How far below zero it sits; positive means the sumset's dimension
    /// bound bites strictly below the combined dimension.
    pub margin: f64,
}

/// Estimate the coordinate-sum projected pressure of the product system at
/// s_target. A strictly negative value certifies the drop.
pub fn sumset_pressure_drop(ss: &SumsetSystem, n: usize) -> Result<PressureDrop> {
    if n == 0 {
        return Err(Error::invalid("depth must be positive"));
    }
    let d = ss.d1 * ss.d2;
    if ss.s_target >= d as f64 {
        return Err(Error::domain(format!(
            "combined dimension {} reaches the projection rank {d}; both factors fill their box",
            ss.s_target
        )));
    }
    let n_min = n.saturating_sub(1).max(1);
    let est = pressure::pressure(&ss.product, &ss.q_sum, ss.s_target, n_min, n)?;
    Ok(PressureDrop {
        p_q_at_s: est.diff_quotient,
        margin: -est.diff_quotient,
    })
}

/// The frozen sumset demo: nine maps per factor, all sharing one diagonal
/// Kronecker contraction, arranged so each factor has dimension
/// ln 9 / ln(1/0.27) while the sum loses dimension against the naive sum.
pub fn sumset_demo() -> Result<SumsetSystem> {
    let a_left = Matrix::diag(&[0.6, 0.15]);
    let a_right = Matrix::diag(&[0.45, 0.45]);
    let b_left = Matrix::diag(&[0.45, 0.45]);
    let b_right = Matrix::diag(&[0.6, 0.15]);
    let a_parts: Vec<(Matrix, Matrix)> =
        (0..9).map(|_| (a_left.clone(), a_right.clone())).collect();
    let b_parts: Vec<(Matrix, Matrix)> =
        (0..9).map(|_| (b_left.clone(), b_right.clone())).collect();
    sumset_system(&a_parts, &b_parts, 3, 77)
}
