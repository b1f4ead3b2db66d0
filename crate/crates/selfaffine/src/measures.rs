//! Word distributions on the coding space, Lyapunov exponents, local
//! Lyapunov dimension under a projection, and the orbit-limit clustering
//! diagnostic.

use crate::error::{Error, Result};
use crate::ifs::{IfsSystem, Word};
use crate::linalg::{log_svf_raw, qr, Matrix};
use crate::pressure::{self, DimensionEstimate, ProjectionMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::LN_2;

/// Row and total sums of probability vectors may drift from 1 by this much.
const PROB_SUM_TOL: f64 = 1e-12;

/// Steps between QR re-orthonormalizations in exponent estimation.
const QR_INTERVAL: usize = 20;

/// Bisection width for the local dimension root.
const LOCAL_DIM_TOL: f64 = 1e-12;

/// Largest cluster count the elbow rule will consider.
const MAX_CLUSTERS: usize = 3;

/// Grow the cluster count while the optimal sum of squares drops by at
/// least this factor.
const ELBOW_RATIO: f64 = 0.25;

fn check_prob_vector(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::invalid(format!("{what} must be nonempty")));
    }
    if !p.iter().all(|x| x.is_finite() && *x >= 0.0) {
        return Err(Error::invalid(format!(
            "{what} entries must be finite and nonnegative"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::invalid(format!("{what} sums to {sum}, expected 1")));
    }
    Ok(())
}

fn draw(rng: &mut ChaCha8Rng, cumulative: &[f64]) -> usize {
    let u: f64 = rng.gen();
    match cumulative.iter().position(|&c| u < c) {
        Some(i) => i,
        None => cumulative.len() - 1,
    }
}

fn stream_rng(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// A product measure on infinite words: letters drawn independently.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliMeasure {
    probs: Vec<f64>,
}

impl BernoulliMeasure {
    /// Probabilities must be strictly positive and sum to 1.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_prob_vector(&probs, "letter probabilities")?;
        if !probs.iter().all(|&p| p > 0.0) {
            return Err(Error::invalid("letter probabilities must be positive"));
        }
        Ok(BernoulliMeasure { probs })
    }

    /// Equal weight on each of `n` letters.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("need at least one letter"));
        }
        BernoulliMeasure::new(vec![1.0 / n as f64; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// log of the cylinder mass of `w`.
    pub fn log_mass(&self, w: &[usize]) -> Result<f64> {
        let mut acc = 0.0;
        for &i in w {
            let p = self
                .probs
                .get(i)
                .ok_or_else(|| Error::invalid(format!("letter {i} out of range")))?;
            acc += p.ln();
        }
        Ok(acc)
    }

    fn cumulative(&self) -> Vec<f64> {
        self.probs
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect()
    }
}

/// Draw a length-`n` word. Streams with distinct `stream_id` are
/// statistically independent and individually reproducible.
pub fn sample_word(mu: &BernoulliMeasure, n: usize, seed: u64, stream_id: u64) -> Word {
    let mut rng = stream_rng(seed, stream_id);
    let cum = mu.cumulative();
    (0..n).map(|_| draw(&mut rng, &cum)).collect()
}

/// A finite-state hidden-Markov word source: a hidden state emits a letter,
/// and the (state, letter) pair determines the next state. Bernoulli
/// measures are the one-state case.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovWordSource {
    init: Vec<f64>,
    emit: Vec<Vec<f64>>,
    next: Vec<Vec<usize>>,
}

impl MarkovWordSource {
    pub fn new(init: Vec<f64>, emit: Vec<Vec<f64>>, next: Vec<Vec<usize>>) -> Result<Self> {
        check_prob_vector(&init, "initial state distribution")?;
        let states = init.len();
        if emit.len() != states || next.len() != states {
            return Err(Error::invalid("emission and successor tables must have one row per state"));
        }
        let alphabet = emit[0].len();
        if alphabet == 0 {
            return Err(Error::invalid("alphabet must be nonempty"));
        }
        for row in &emit {
            if row.len() != alphabet {
                return Err(Error::invalid("emission rows must share one alphabet"));
            }
            check_prob_vector(row, "emission row")?;
        }
        for row in &next {
            if row.len() != alphabet {
                return Err(Error::invalid("successor rows must share one alphabet"));
            }
            if !row.iter().all(|&m| m < states) {
                return Err(Error::invalid("successor state out of range"));
            }
        }
        Ok(MarkovWordSource { init, emit, next })
    }

    pub fn states(&self) -> usize {
        self.init.len()
    }

    pub fn alphabet_len(&self) -> usize {
        self.emit[0].len()
    }

    pub fn init(&self) -> &[f64] {
        &self.init
    }

    pub fn emission(&self, state: usize) -> &[f64] {
        &self.emit[state]
    }

    pub fn successor(&self, state: usize, letter: usize) -> usize {
        self.next[state][letter]
    }

    /// Row-stochastic state transition matrix induced by marginalizing the
    /// emitted letter.
    pub fn state_transition(&self) -> Vec<Vec<f64>> {
        let states = self.states();
        let mut p = vec![vec![0.0; states]; states];
        for m in 0..states {
            for i in 0..self.alphabet_len() {
                p[m][self.next[m][i]] += self.emit[m][i];
            }
        }
        p
    }

    pub fn sample_word(&self, n: usize, seed: u64, stream_id: u64) -> Word {
        let mut rng = stream_rng(seed, stream_id);
        let init_cum: Vec<f64> = cumulative(&self.init);
        let emit_cum: Vec<Vec<f64>> = self.emit.iter().map(|r| cumulative(r)).collect();
        let mut state = draw(&mut rng, &init_cum);
        let mut w = Vec::with_capacity(n);
        for _ in 0..n {
            let letter = draw(&mut rng, &emit_cum[state]);
            w.push(letter);
            state = self.next[state][letter];
        }
        w
    }
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    p.iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

/// Either flavor of word source accepted by the orbit diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub enum WordSource {
    Bernoulli(BernoulliMeasure),
    Markov(MarkovWordSource),
}

impl WordSource {
    pub fn alphabet_len(&self) -> usize {
        match self {
            WordSource::Bernoulli(mu) => mu.len(),
            WordSource::Markov(src) => src.alphabet_len(),
        }
    }

    pub fn sample(&self, n: usize, seed: u64, stream_id: u64) -> Word {
        match self {
            WordSource::Bernoulli(mu) => sample_word(mu, n, seed, stream_id),
            WordSource::Markov(src) => src.sample_word(n, seed, stream_id),
        }
    }
}

/// Monte Carlo estimates of the Lyapunov exponents of random products.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovEstimate {
    /// Exponents, non-increasing.
    pub exponents: Vec<f64>,
    /// Standard error of each mean across trials (0 for a single trial).
    pub std_errors: Vec<f64>,
    pub n: usize,
    pub trials: usize,
}

/// Estimate all d Lyapunov exponents of words drawn from `mu` by QR
/// re-orthonormalization along products of length `n`, averaged over
/// independent trials.
pub fn lyapunov_exponents(
    sys: &IfsSystem,
    mu: &BernoulliMeasure,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    if mu.len() != sys.len() {
        return Err(Error::invalid(format!(
            "measure has {} letters, system has {} maps",
            mu.len(),
            sys.len()
        )));
    }
    if n < 100 {
        return Err(Error::domain("need word length n >= 100"));
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let d = sys.dimension();
    // growth of sigma_j along the word equals growth under left products of
    // the transposes taken in letter order
    let transposes: Vec<Matrix> = sys.maps().iter().map(|m| m.linear().transpose()).collect();

    let per_trial: Vec<Result<Vec<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let w = sample_word(mu, n, seed, t as u64);
            let mut frame = Matrix::identity(d);
            let mut logs = vec![0.0; d];
            let mut pending = 0usize;
            for &i in &w {
                frame = transposes[i].mul(&frame)?;
                pending += 1;
                if pending == QR_INTERVAL {
                    let (q, r) = qr(&frame)?;
                    for (j, log) in logs.iter_mut().enumerate() {
                        *log += r.get(j, j).abs().ln();
                    }
                    frame = q;
                    pending = 0;
                }
            }
            if pending > 0 {
                let (_, r) = qr(&frame)?;
                for (j, log) in logs.iter_mut().enumerate() {
                    *log += r.get(j, j).abs().ln();
                }
            }
            let mut exps: Vec<f64> = logs.iter().map(|l| l / n as f64).collect();
            exps.sort_by(|a, b| b.total_cmp(a));
            Ok(exps)
        })
        .collect();

    let mut exponents = vec![0.0; d];
    let mut sq = vec![0.0; d];
    let mut rows = Vec::with_capacity(trials);
    for r in per_trial {
        rows.push(r?);
    }
    for row in &rows {
        for j in 0..d {
            exponents[j] += row[j];
        }
    }
    for e in exponents.iter_mut() {
        *e /= trials as f64;
    }
    for row in &rows {
        for j in 0..d {
            let dev = row[j] - exponents[j];
            sq[j] += dev * dev;
        }
    }
    let std_errors: Vec<f64> = if trials > 1 {
        sq.iter()
            .map(|s| (s / (trials as f64 - 1.0)).sqrt() / (trials as f64).sqrt())
            .collect()
    } else {
        vec![0.0; d]
    };
    Ok(LyapunovEstimate {
        exponents,
        std_errors,
        n,
        trials,
    })
}

/// Root in s of the per-letter gap between the projected singular value
/// function along one finite word and the word's cylinder mass. Saturates
/// at rank q when the gap is still nonnegative there.
pub fn local_lyap_dim_q(
    sys: &IfsSystem,
    q: &ProjectionMap,
    mu: &BernoulliMeasure,
    word: &[usize],
) -> Result<DimensionEstimate> {
    if mu.len() != sys.len() {
        return Err(Error::invalid(format!(
            "measure has {} letters, system has {} maps",
            mu.len(),
            sys.len()
        )));
    }
    if word.is_empty() {
        return Err(Error::invalid("word must be nonempty"));
    }
    let min_depth = pressure::min_root_depth(sys, q)?;
    if word.len() < min_depth {
        return Err(Error::domain(format!(
            "word length {} too short for a decreasing objective; need at least {min_depth}",
            word.len()
        )));
    }
    let n = word.len() as f64;
    let log_mass = mu.log_mass(word)?;
    let (sv, e) = pressure::word_spectrum(sys, Some(q.matrix()), word)?;
    let e_ln2 = e as f64 * LN_2;
    let gap = |s: f64| (log_svf_raw(&sv, s) + s * e_ln2 - log_mass) / n;

    let rank = q.rank() as f64;
    if gap(0.0) <= 0.0 {
        return Ok(DimensionEstimate {
            s_star: 0.0,
            bracket: (0.0, 0.0),
            pressure_at_root: gap(0.0),
            saturated: false,
        });
    }
    if gap(rank) >= 0.0 {
        return Ok(DimensionEstimate {
            s_star: rank,
            bracket: (rank, rank),
            pressure_at_root: gap(rank),
            saturated: true,
        });
    }
    let mut lo = 0.0;
    let mut hi = rank;
    while hi - lo > LOCAL_DIM_TOL {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s_star = 0.5 * (lo + hi);
    Ok(DimensionEstimate {
        s_star,
        bracket: (lo, hi),
        pressure_at_root: gap(s_star),
        saturated: false,
    })
}

/// Per-orbit scaling samples with their cluster structure.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitLimitReport {
    /// Word length each sample was taken at.
    pub n: usize,
    /// One value per trial: (1/n) log of the top singular value of the
    /// projected word product.
    pub samples: Vec<f64>,
    /// Cluster centers, ascending.
    pub cluster_means: Vec<f64>,
    /// Fraction of samples per cluster, aligned with `cluster_means`.
    pub cluster_weights: Vec<f64>,
    /// Smallest gap between adjacent centers over the pooled within-cluster
    /// spread; for a single cluster, the score of the best two-way split.
    pub separation_score: f64,
}

/// Sample per-orbit top singular value rates of projected word products
/// under a Bernoulli measure and cluster them.
pub fn exactness_diagnostic(
    sys: &IfsSystem,
    q: &ProjectionMap,
    mu: &BernoulliMeasure,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<OrbitLimitReport> {
    exactness_diagnostic_with(sys, q, &WordSource::Bernoulli(mu.clone()), n, trials, seed)
}

/// As [`exactness_diagnostic`] but sampling words from any source, e.g. a
/// hidden-Markov equilibrium source.
pub fn exactness_diagnostic_with(
    sys: &IfsSystem,
    q: &ProjectionMap,
    source: &WordSource,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<OrbitLimitReport> {
    if source.alphabet_len() != sys.len() {
        return Err(Error::invalid(format!(
            "source has {} letters, system has {} maps",
            source.alphabet_len(),
            sys.len()
        )));
    }
    if q.dimension() != sys.dimension() {
        return Err(Error::domain("projection dimension does not match system"));
    }
    if n == 0 {
        return Err(Error::invalid("word length must be positive"));
    }
    if trials < 100 {
        return Err(Error::domain("need at least 100 trials"));
    }
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let w = source.sample(n, seed, t as u64);
            let (sv, e) = pressure::word_spectrum(sys, Some(q.matrix()), &w)?;
            Ok((sv[0].ln() + e as f64 * LN_2) / n as f64)
        })
        .collect::<Result<_>>()?;

    let clusters = cluster_samples(&samples);
    Ok(OrbitLimitReport {
        n,
        samples,
        cluster_means: clusters.means,
        cluster_weights: clusters.weights,
        separation_score: clusters.separation,
    })
}

struct Clustering {
    means: Vec<f64>,
    weights: Vec<f64>,
    separation: f64,
}

/// Exact 1-d k-means on sorted data by dynamic programming, with the
/// cluster count chosen by successive sum-of-squares ratios.
fn cluster_samples(samples: &[f64]) -> Clustering {
    let m = samples.len();
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let mean = xs.iter().sum::<f64>() / m as f64;
    // center for numerically stable segment costs
    let centered: Vec<f64> = xs.iter().map(|x| x - mean).collect();
    let max_abs = centered.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let tiny_sse = 1e-22 * m as f64 * (1.0 + max_abs * max_abs);

    let kmax = MAX_CLUSTERS.min(m);
    let partitions: Vec<(f64, Vec<usize>)> =
        (1..=kmax).map(|k| best_partition(&centered, k)).collect();

    let mut k = 1;
    while k < kmax {
        let cur = partitions[k - 1].0;
        let nxt = partitions[k].0;
        if cur > tiny_sse && nxt <= ELBOW_RATIO * cur {
            k += 1;
        } else {
            break;
        }
    }

    let stats = |bounds: &[usize]| -> (Vec<f64>, Vec<f64>, f64) {
        let mut means = Vec::new();
        let mut weights = Vec::new();
        let mut sse = 0.0;
        let mut start = 0;
        for &end in bounds {
            let seg = &xs[start..end];
            let mu = seg.iter().sum::<f64>() / seg.len() as f64;
            sse += seg.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>();
            means.push(mu);
            weights.push(seg.len() as f64 / m as f64);
            start = end;
        }
        (means, weights, sse)
    };
    let score_of = |bounds: &[usize]| -> f64 {
        let (means, _, sse) = stats(bounds);
        let kk = means.len();
        if kk < 2 || m <= kk {
            return 0.0;
        }
        let min_gap = means
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        let pooled = (sse / (m - kk) as f64).sqrt();
        let floor = 1e-12 * (1.0 + max_abs);
        min_gap / pooled.max(floor)
    };

    let (means, weights, _) = stats(&partitions[k - 1].1);
    let separation = if k >= 2 {
        score_of(&partitions[k - 1].1)
    } else if kmax >= 2 {
        // how split-able the single cluster looks
        score_of(&partitions[1].1)
    } else {
        0.0
    };
    Clustering {
        means,
        weights,
        separation,
    }
}

/// Minimal within-cluster sum of squares over contiguous partitions of the
/// sorted slice into k nonempty parts. Returns (sse, cluster end indices).
fn best_partition(xs: &[f64], k: usize) -> (f64, Vec<usize>) {
    let m = xs.len();
    let mut s = vec![0.0; m + 1];
    let mut s2 = vec![0.0; m + 1];
    for (i, &x) in xs.iter().enumerate() {
        s[i + 1] = s[i] + x;
        s2[i + 1] = s2[i] + x * x;
    }
    let cost = |i: usize, j: usize| -> f64 {
        let len = (j - i) as f64;
        let sum = s[j] - s[i];
        (s2[j] - s2[i] - sum * sum / len).max(0.0)
    };
    // dp[c-1][j]: best sse splitting xs[..j] into c nonempty clusters
    let mut dp = vec![vec![f64::INFINITY; m + 1]; k];
    let mut parent = vec![vec![0usize; m + 1]; k];
    for j in 1..=m {
        dp[0][j] = cost(0, j);
    }
    for c in 1..k {
        for j in (c + 1)..=m {
            let mut best = f64::INFINITY;
            let mut arg = c;
            for i in c..j {
                let v = dp[c - 1][i] + cost(i, j);
                if v < best {
                    best = v;
                    arg = i;
                }
            }
            dp[c][j] = best;
            parent[c][j] = arg;
        }
    }
    let mut bounds = vec![0usize; k];
    let mut j = m;
    for c in (0..k).rev() {
        bounds[c] = j;
        if c > 0 {
            j = parent[c][j];
        }
    }
    (dp[k - 1][m], bounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::AffineMap;
    use crate::linalg::Matrix;

    fn sys_from_linears(linears: Vec<Matrix>) -> IfsSystem {
        let d = linears[0].rows();
        let maps = linears
            .into_iter()
            .map(|m| AffineMap::new(m, vec![0.0; d]).unwrap())
            .collect();
        IfsSystem::new(maps).unwrap()
    }

    fn scalar_system(ratios: &[f64], d: usize) -> IfsSystem {
        sys_from_linears(
            ratios
                .iter()
                .map(|&r| Matrix::diag(&vec![r; d]))
                .collect(),
        )
    }

    #[test]
    fn bernoulli_rejects_bad_probs() {
        assert!(BernoulliMeasure::new(vec![0.5, 0.6]).is_err());
        assert!(BernoulliMeasure::new(vec![1.1, -0.1]).is_err());
        assert!(BernoulliMeasure::new(vec![]).is_err());
        assert!(BernoulliMeasure::new(vec![1.0]).is_ok());
        assert!(BernoulliMeasure::new(vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn sample_word_matches_frequencies() {
        let mu = BernoulliMeasure::new(vec![0.2, 0.3, 0.5]).unwrap();
        let n = 100_000;
        let w = sample_word(&mu, n, 7, 0);
        let mut counts = [0usize; 3];
        for &i in &w {
            counts[i] += 1;
        }
        for (i, &p) in mu.probs().iter().enumerate() {
            let freq = counts[i] as f64 / n as f64;
            assert!((freq - p).abs() < 0.01, "letter {i}: {freq} vs {p}");
        }
    }

    #[test]
    fn sample_word_streams_are_reproducible_and_distinct() {
        let mu = BernoulliMeasure::uniform(4).unwrap();
        let a = sample_word(&mu, 500, 9, 3);
        let b = sample_word(&mu, 500, 9, 3);
        let c = sample_word(&mu, 500, 9, 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn markov_source_validates_tables() {
        // stochastic rows required
        assert!(MarkovWordSource::new(
            vec![1.0],
            vec![vec![0.5, 0.4]],
            vec![vec![0, 0]]
        )
        .is_err());
        // successor out of range
        assert!(MarkovWordSource::new(
            vec![1.0],
            vec![vec![0.5, 0.5]],
            vec![vec![0, 1]]
        )
        .is_err());
        assert!(MarkovWordSource::new(
            vec![0.5, 0.5],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0, 0], vec![1, 1]]
        )
        .is_ok());
    }

    #[test]
    fn markov_state_transition_marginalizes_emissions() {
        // state flips exactly when letter 1 is emitted
        let src = MarkovWordSource::new(
            vec![0.5, 0.5],
            vec![vec![0.85, 0.15], vec![0.25, 0.75]],
            vec![vec![0, 1], vec![1, 0]],
        )
        .unwrap();
        let p = src.state_transition();
        assert!((p[0][0] - 0.85).abs() < 1e-15);
        assert!((p[0][1] - 0.15).abs() < 1e-15);
        assert!((p[1][0] - 0.75).abs() < 1e-15);
        assert!((p[1][1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn frozen_regime_source_emits_constant_words() {
        // two absorbing states, deterministic emissions: each orbit is a
        // constant word chosen by the initial state
        let src = MarkovWordSource::new(
            vec![0.5, 0.5],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0, 0], vec![1, 1]],
        )
        .unwrap();
        let mut zeros = 0;
        for t in 0..200 {
            let w = src.sample_word(50, 11, t);
            assert!(w.iter().all(|&i| i == w[0]));
            if w[0] == 0 {
                zeros += 1;
            }
        }
        let frac = zeros as f64 / 200.0;
        assert!((frac - 0.5).abs() < 0.12, "initial state frequency {frac}");
    }

    #[test]
    fn lyapunov_single_diagonal_map_is_exact() {
        let sys = sys_from_linears(vec![Matrix::diag(&[0.5, 0.2])]);
        let mu = BernoulliMeasure::new(vec![1.0]).unwrap();
        let est = lyapunov_exponents(&sys, &mu, 200, 1, 3).unwrap();
        assert!((est.exponents[0] - 0.5f64.ln()).abs() < 1e-12);
        assert!((est.exponents[1] - 0.2f64.ln()).abs() < 1e-12);
        assert_eq!(est.std_errors, vec![0.0, 0.0]);
    }

    #[test]
    fn lyapunov_commuting_pair_sums_to_log_det() {
        // both maps have determinant 1/8, so the exponent sum is exactly
        // ln(1/8) on every trial; individual exponents concentrate at the
        // midpoint with an O(sqrt(n)/n) spread from letter count imbalance
        let sys = sys_from_linears(vec![
            Matrix::diag(&[0.5, 0.25]),
            Matrix::diag(&[0.25, 0.5]),
        ]);
        let mu = BernoulliMeasure::uniform(2).unwrap();
        let est = lyapunov_exponents(&sys, &mu, 2000, 20, 5).unwrap();
        let sum = est.exponents[0] + est.exponents[1];
        assert!((sum - 0.125f64.ln()).abs() < 1e-10, "sum {sum}");
        let mid = 0.5 * (0.5f64.ln() + 0.25f64.ln());
        assert!((est.exponents[0] - mid).abs() < 0.03);
        assert!((est.exponents[1] - mid).abs() < 0.03);
        assert!(est.exponents[0] >= est.exponents[1]);
    }

    #[test]
    fn lyapunov_validates_inputs() {
        let sys = scalar_system(&[0.5, 0.5], 2);
        let mu = BernoulliMeasure::uniform(2).unwrap();
        assert!(lyapunov_exponents(&sys, &mu, 99, 5, 0).is_err());
        assert!(lyapunov_exponents(&sys, &mu, 100, 0, 0).is_err());
        let mu3 = BernoulliMeasure::uniform(3).unwrap();
        assert!(lyapunov_exponents(&sys, &mu3, 100, 5, 0).is_err());
    }

    #[test]
    fn local_dim_scalar_closed_form() {
        // 3 maps at ratio 1/3 with equal weights: the objective is
        // ln 3 - s ln 3 for s in [0, 1], so the root is exactly 1
        let sys = scalar_system(&[1.0 / 3.0; 3], 2);
        let mu = BernoulliMeasure::uniform(3).unwrap();
        let word = sample_word(&mu, 1000, 17, 0);
        let est = local_lyap_dim_q(&sys, &ProjectionMap::identity(2), &mu, &word).unwrap();
        assert!((est.s_star - 1.0).abs() < 1e-9, "s_star {}", est.s_star);
        assert!(!est.saturated);
        // a rank-1 coordinate projection has the same root, now exactly at
        // rank, which reports as saturation
        let q = ProjectionMap::coord(2, 1).unwrap();
        let est = local_lyap_dim_q(&sys, &q, &mu, &word).unwrap();
        assert_eq!(est.s_star, 1.0);
        assert!(est.saturated);
    }

    #[test]
    fn local_dim_heavy_letter_shrinks_root() {
        let sys = scalar_system(&[0.4, 0.3], 2);
        let mu = BernoulliMeasure::new(vec![1.0 - 1e-9, 1e-9]).unwrap();
        let word = vec![0usize; 1000];
        let est = local_lyap_dim_q(&sys, &ProjectionMap::identity(2), &mu, &word).unwrap();
        assert!(est.s_star < 1e-6, "s_star {}", est.s_star);
    }

    #[test]
    fn local_dim_rejects_bad_words() {
        let sys = scalar_system(&[0.5, 0.5], 2);
        let mu = BernoulliMeasure::uniform(2).unwrap();
        let q = ProjectionMap::identity(2);
        assert!(local_lyap_dim_q(&sys, &q, &mu, &[]).is_err());
        assert!(local_lyap_dim_q(&sys, &q, &mu, &[0, 2]).is_err());
    }

    #[test]
    fn exactness_scalar_system_is_one_tight_cluster() {
        let sys = scalar_system(&[0.5, 0.5], 2);
        let mu = BernoulliMeasure::uniform(2).unwrap();
        let report =
            exactness_diagnostic(&sys, &ProjectionMap::identity(2), &mu, 50, 100, 23).unwrap();
        assert_eq!(report.cluster_means.len(), 1);
        assert!((report.cluster_means[0] - 0.5f64.ln()).abs() < 1e-12);
        assert_eq!(report.cluster_weights, vec![1.0]);
        assert_eq!(report.samples.len(), 100);
    }

    #[test]
    fn exactness_two_regime_source_splits_cleanly() {
        let sys = scalar_system(&[0.5, 0.25], 2);
        let src = WordSource::Markov(
            MarkovWordSource::new(
                vec![0.5, 0.5],
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                vec![vec![0, 0], vec![1, 1]],
            )
            .unwrap(),
        );
        let report = exactness_diagnostic_with(
            &sys,
            &ProjectionMap::identity(2),
            &src,
            60,
            200,
            29,
        )
        .unwrap();
        assert_eq!(report.cluster_means.len(), 2);
        assert!((report.cluster_means[0] - 0.25f64.ln()).abs() < 1e-12);
        assert!((report.cluster_means[1] - 0.5f64.ln()).abs() < 1e-12);
        assert!((report.cluster_weights[0] - 0.5).abs() < 0.15);
        assert!((report.cluster_weights[1] - 0.5).abs() < 0.15);
        assert!(report.separation_score >= 5.0);
    }

    #[test]
    fn exactness_generic_bernoulli_is_one_cluster() {
        let sys = sys_from_linears(vec![
            Matrix::from_rows(&[&[0.35, 0.1], &[0.05, 0.3]]).unwrap(),
            Matrix::from_rows(&[&[0.2, -0.15], &[0.1, 0.4]]).unwrap(),
        ]);
        let mu = BernoulliMeasure::uniform(2).unwrap();
        let report =
            exactness_diagnostic(&sys, &ProjectionMap::identity(2), &mu, 400, 150, 31).unwrap();
        assert_eq!(
            report.cluster_means.len(),
            1,
            "means {:?} score {}",
            report.cluster_means,
            report.separation_score
        );
        assert!(report.separation_score < 3.5);
    }

    #[test]
    fn exactness_validates_inputs() {
        let sys = scalar_system(&[0.5, 0.5], 2);
        let mu = BernoulliMeasure::uniform(2).unwrap();
        let q = ProjectionMap::identity(2);
        assert!(exactness_diagnostic(&sys, &q, &mu, 50, 99, 0).is_err());
        assert!(exactness_diagnostic(&sys, &q, &mu, 0, 100, 0).is_err());
        let mu3 = BernoulliMeasure::uniform(3).unwrap();
        assert!(exactness_diagnostic(&sys, &q, &mu3, 50, 100, 0).is_err());
    }

    #[test]
    fn kmeans_partition_finds_exact_groups() {
        let xs = vec![0.0, 0.0, 0.0, 10.0, 10.0, 10.0, 100.0];
        let (sse3, bounds3) = best_partition(&xs, 3);
        assert!(sse3 < 1e-12);
        assert_eq!(bounds3, vec![3, 6, 7]);
        let (sse2, bounds2) = best_partition(&xs, 2);
        assert!((sse2 - 150.0).abs() < 1e-9);
        assert_eq!(bounds2, vec![6, 7]);
    }

    #[test]
    fn identical_samples_cluster_once_with_zero_score() {
        let clusters = cluster_samples(&vec![2.5; 120]);
        assert_eq!(clusters.means, vec![2.5]);
        assert_eq!(clusters.weights, vec![1.0]);
        assert_eq!(clusters.separation, 0.0);
    }
}
