//! Affine iterated function systems: word-indexed compositions, contraction
//! checks, and attractor sampling via the chaos game.

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::linalg::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// A finite word over the alphabet `0..N` of a system.
pub type Word = Vec<usize>;

/// Points generated per independent orbit stream; fixed so that parallel
/// and serial chaos-game runs produce identical clouds.
const ORBIT_CHUNK: usize = 65_536;

/// An invertible affine map `x -> A x + t` on real d-space.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    linear: Matrix,
    translation: Vec<f64>,
}

impl AffineMap {
    /// Build a map, checking that the linear part is square, matches the
    /// translation length, and has full numeric rank.
    pub fn new(linear: Matrix, translation: Vec<f64>) -> Result<Self> {
        if linear.rows() != linear.cols() {
            return Err(Error::invalid("linear part must be square"));
        }
        if translation.len() != linear.rows() {
            return Err(Error::invalid("translation length must match dimension"));
        }
        if !translation.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("translation entries must be finite"));
        }
        let spectrum = crate::linalg::singular_values(&linear)?;
        if spectrum.rank() < linear.rows() {
            return Err(Error::invalid("linear part must be invertible"));
        }
        Ok(AffineMap { linear, translation })
    }

    /// Assemble without the rank check; used for compositions of maps that
    /// are invertible by construction even when long products underflow the
    /// relative rank threshold.
    pub(crate) fn assemble(linear: Matrix, translation: Vec<f64>) -> Self {
        AffineMap { linear, translation }
    }

    pub fn linear(&self) -> &Matrix {
        &self.linear
    }

    pub fn translation(&self) -> &[f64] {
        &self.translation
    }

    pub fn dimension(&self) -> usize {
        self.linear.rows()
    }

    /// Evaluate `A x + t`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.linear.apply(x)?;
        for (o, t) in out.iter_mut().zip(&self.translation) {
            *o += t;
        }
        Ok(out)
    }
}

/// A finite tuple of affine maps sharing one ambient dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct IfsSystem {
    dimension: usize,
    maps: Vec<AffineMap>,
}

impl IfsSystem {
    pub fn new(maps: Vec<AffineMap>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::invalid("system needs at least one map"));
        }
        let dimension = maps[0].dimension();
        if maps.iter().any(|m| m.dimension() != dimension) {
            return Err(Error::invalid("all maps must share one dimension"));
        }
        Ok(IfsSystem { dimension, maps })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn map(&self, i: usize) -> &AffineMap {
        &self.maps[i]
    }

    /// New system with map `i` removed; errors when only one map remains.
    pub fn without_map(&self, i: usize) -> Result<IfsSystem> {
        if i >= self.maps.len() {
            return Err(Error::invalid("map index out of range"));
        }
        if self.maps.len() == 1 {
            return Err(Error::invalid("cannot remove the only map"));
        }
        let mut maps = self.maps.clone();
        maps.remove(i);
        IfsSystem::new(maps)
    }
}

pub(crate) fn check_word(sys: &IfsSystem, w: &[usize]) -> Result<()> {
    if let Some(&bad) = w.iter().find(|&&l| l >= sys.len()) {
        return Err(Error::invalid(format!(
            "letter {bad} out of range for alphabet of size {}",
            sys.len()
        )));
    }
    Ok(())
}

/// Product of the linear parts along a word, in letter order; the empty
/// word gives the identity.
pub fn linear_word(sys: &IfsSystem, w: &[usize]) -> Result<Matrix> {
    check_word(sys, w)?;
    let mut acc = Matrix::identity(sys.dimension());
    for &letter in w {
        acc = acc.mul(sys.map(letter).linear())?;
    }
    Ok(acc)
}

/// Composition of the maps along a word: letter order, first letter
/// outermost. The empty word gives the identity map.
pub fn affine_word(sys: &IfsSystem, w: &[usize]) -> Result<AffineMap> {
    check_word(sys, w)?;
    let d = sys.dimension();
    let mut linear = Matrix::identity(d);
    let mut translation = vec![0.0; d];
    for &letter in w.iter().rev() {
        let m = sys.map(letter);
        translation = m.apply(&translation)?;
        linear = m.linear().mul(&linear)?;
    }
    Ok(AffineMap::assemble(linear, translation))
}

/// Per-map operator norms and the pairwise-sum contraction condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    /// Euclidean operator norm of each linear part.
    pub norms: Vec<f64>,
    /// Largest operator norm.
    pub max_norm: f64,
    /// Largest sum over distinct pairs; for a single map, twice its norm.
    pub max_pair_sum: f64,
    /// True when max_norm < 1.
    pub contracting: bool,
    /// True when max_pair_sum < 1 (single map: norm < 1/2).
    pub falconer_ok: bool,
}

/// Compute operator norms of all linear parts and the contraction flags.
///
/// Norms are Euclidean; a system can contract in some adapted norm while
/// failing this check, so callers may force-run sampling with
/// [`chaos_game_unchecked`].
pub fn contraction_report(sys: &IfsSystem) -> ContractionReport {
    let norms: Vec<f64> = sys.maps().iter().map(|m| m.linear().op_norm()).collect();
    let max_norm = norms.iter().cloned().fold(0.0, f64::max);
    let max_pair_sum = if norms.len() == 1 {
        2.0 * max_norm
    } else {
        let mut best = 0.0;
        for i in 0..norms.len() {
            for j in (i + 1)..norms.len() {
                best = f64::max(best, norms[i] + norms[j]);
            }
        }
        best
    };
    ContractionReport {
        max_norm,
        max_pair_sum,
        contracting: max_norm < 1.0,
        falconer_ok: max_pair_sum < 1.0,
        norms,
    }
}

fn check_probs(sys: &IfsSystem, probs: &[f64]) -> Result<()> {
    if probs.len() != sys.len() {
        return Err(Error::domain(format!(
            "{} probabilities for {} maps",
            probs.len(),
            sys.len()
        )));
    }
    if probs.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
        return Err(Error::domain("probabilities must be positive and finite"));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// Draw a letter index from cumulative weights.
#[inline]
fn draw_letter(rng: &mut ChaCha8Rng, cumulative: &[f64]) -> usize {
    let u: f64 = rng.gen();
    match cumulative.iter().position(|&c| u < c) {
        Some(i) => i,
        None => cumulative.len() - 1,
    }
}

/// Sample the attractor by random iteration: `x_{k+1} = T_{i_k}(x_k)` with
/// letters i.i.d. from `probs`, discarding the first `burn_in` points of
/// each orbit stream. Deterministic per seed and independent of worker
/// count: the cloud is the concatenation, in stream order, of fixed-size
/// orbit streams with per-stream RNG state.
pub fn chaos_game(
    sys: &IfsSystem,
    probs: &[f64],
    n_points: usize,
    burn_in: usize,
    seed: u64,
) -> Result<PointCloud> {
    let report = contraction_report(sys);
    if !report.contracting {
        return Err(Error::contraction(format!(
            "max operator norm {} is not < 1; pass force to sample anyway",
            report.max_norm
        )));
    }
    chaos_game_unchecked(sys, probs, n_points, burn_in, seed)
}

/// [`chaos_game`] without the contraction guard, for systems known to
/// contract in some non-Euclidean norm.
pub fn chaos_game_unchecked(
    sys: &IfsSystem,
    probs: &[f64],
    n_points: usize,
    burn_in: usize,
    seed: u64,
) -> Result<PointCloud> {
    check_probs(sys, probs)?;
    if n_points == 0 {
        return PointCloud::new(sys.dimension(), Vec::new());
    }
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in probs {
        acc += p;
        cumulative.push(acc);
    }
    let d = sys.dimension();
    let n_streams = n_points.div_ceil(ORBIT_CHUNK);
    let chunks: Vec<Vec<f64>> = (0..n_streams)
        .into_par_iter()
        .map(|stream| {
            let count = ORBIT_CHUNK.min(n_points - stream * ORBIT_CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream as u64);
            let mut x = vec![0.0; d];
            for _ in 0..burn_in {
                let i = draw_letter(&mut rng, &cumulative);
                x = sys.map(i).apply(&x).expect("dimension fixed");
            }
            let mut out = Vec::with_capacity(count * d);
            for _ in 0..count {
                let i = draw_letter(&mut rng, &cumulative);
                x = sys.map(i).apply(&x).expect("dimension fixed");
                out.extend_from_slice(&x);
            }
            out
        })
        .collect();
    let mut points = Vec::with_capacity(n_points * d);
    for c in chunks {
        points.extend_from_slice(&c);
    }
    PointCloud::new(d, points)
}

/// Image of `v0` under the composition along `w`; approximates the coding
/// map at the infinite extensions of `w` to within `max_norm^|w| * diam`.
pub fn cylinder_point(sys: &IfsSystem, w: &[usize], v0: &[f64]) -> Result<Vec<f64>> {
    let report = contraction_report(sys);
    if !report.contracting {
        return Err(Error::contraction(format!(
            "max operator norm {} is not < 1",
            report.max_norm
        )));
    }
    check_word(sys, w)?;
    if v0.len() != sys.dimension() {
        return Err(Error::invalid("start vector length must match dimension"));
    }
    let mut x = v0.to_vec();
    for &letter in w.iter().rev() {
        x = sys.map(letter).apply(&x)?;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn scalar_system(ratios: &[f64], translations: &[Vec<f64>], d: usize) -> IfsSystem {
        let maps = ratios
            .iter()
            .zip(translations)
            .map(|(&r, t)| {
                AffineMap::new(Matrix::diag(&vec![r; d]), t.clone()).unwrap()
            })
            .collect();
        IfsSystem::new(maps).unwrap()
    }

    fn random_system(rng: &mut ChaCha8Rng, d: usize, n: usize, scale: f64) -> IfsSystem {
        let maps = (0..n)
            .map(|_| {
                loop {
                    let data: Vec<f64> = (0..d * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let m = Matrix::new(d, d, data).unwrap();
                    let norm = m.op_norm();
                    if norm < 1e-3 {
                        continue;
                    }
                    let t: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    if let Ok(map) = AffineMap::new(m.scale(scale / norm), t) {
                        return map;
                    }
                }
            })
            .collect();
        IfsSystem::new(maps).unwrap()
    }

    #[test]
    fn rejects_singular_linear_part() {
        let m = Matrix::diag(&[1.0, 0.0]);
        assert!(AffineMap::new(m, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn empty_word_is_identity() {
        let sys = scalar_system(&[0.5], &[vec![0.0, 0.0]], 2);
        assert_eq!(linear_word(&sys, &[]).unwrap(), Matrix::identity(2));
        let id = affine_word(&sys, &[]).unwrap();
        assert_eq!(id.linear(), &Matrix::identity(2));
        assert_eq!(id.translation(), &[0.0, 0.0]);
    }

    #[test]
    fn diagonal_word_powers() {
        let m = Matrix::diag(&[0.5, 1.0 / 3.0]);
        let sys = IfsSystem::new(vec![AffineMap::new(m, vec![0.0, 0.0]).unwrap()]).unwrap();
        let p = linear_word(&sys, &[0, 0]).unwrap();
        assert!((p.get(0, 0) - 0.25).abs() < 1e-15);
        assert!((p.get(1, 1) - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn word_product_is_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sys = random_system(&mut rng, 3, 3, 0.8);
        for _ in 0..20 {
            let u: Vec<usize> = (0..rng.gen_range(0..6)).map(|_| rng.gen_range(0..3)).collect();
            let v: Vec<usize> = (0..rng.gen_range(0..6)).map(|_| rng.gen_range(0..3)).collect();
            let mut uv = u.clone();
            uv.extend_from_slice(&v);
            let lhs = linear_word(&sys, &uv).unwrap();
            let rhs = linear_word(&sys, &u).unwrap().mul(&linear_word(&sys, &v).unwrap()).unwrap();
            for (a, b) in lhs.entries().iter().zip(rhs.entries()) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn affine_word_matches_pointwise_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sys = random_system(&mut rng, 2, 3, 0.7);
        let u = vec![0, 2, 1];
        let v = vec![2, 0];
        let mut uv = u.clone();
        uv.extend_from_slice(&v);
        let f_uv = affine_word(&sys, &uv).unwrap();
        let f_u = affine_word(&sys, &u).unwrap();
        let f_v = affine_word(&sys, &v).unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let lhs = f_uv.apply(&x).unwrap();
            let rhs = f_u.apply(&f_v.apply(&x).unwrap()).unwrap();
            for (a, b) in lhs.iter().zip(&rhs) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn contraction_flags() {
        let sys = scalar_system(
            &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            2,
        );
        let r = contraction_report(&sys);
        assert!((r.max_norm - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.max_pair_sum - 2.0 / 3.0).abs() < 1e-12);
        assert!(r.falconer_ok && r.contracting);

        let ok = scalar_system(&[0.6, 0.3], &[vec![0.0], vec![0.0]], 1);
        let r = contraction_report(&ok);
        assert!((r.max_pair_sum - 0.9).abs() < 1e-12);
        assert!(r.falconer_ok);

        let bad = scalar_system(&[0.6, 0.5], &[vec![0.0], vec![0.0]], 1);
        let r = contraction_report(&bad);
        assert!((r.max_pair_sum - 1.1).abs() < 1e-12);
        assert!(!r.falconer_ok && r.contracting);
    }

    #[test]
    fn single_map_fixed_point() {
        // x -> x/2 + 1 has fixed point 2
        let sys = scalar_system(&[0.5], &[vec![1.0]], 1);
        let cloud = chaos_game(&sys, &[1.0], 50, 200, 7).unwrap();
        for &x in cloud.coords() {
            assert!((x - 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn sierpinski_cloud_stays_in_hull() {
        let sys = scalar_system(
            &[0.5, 0.5, 0.5],
            &[vec![0.0, 0.0], vec![0.5, 0.0], vec![0.0, 0.5]],
            2,
        );
        let probs = [1.0 / 3.0; 3];
        let cloud = chaos_game(&sys, &probs, 100_000, 100, 11).unwrap();
        let mut mean = [0.0; 2];
        for p in cloud.coords().chunks(2) {
            assert!(p[0] >= -1e-12 && p[1] >= -1e-12 && p[0] + p[1] <= 1.0 + 1e-12);
            mean[0] += p[0];
            mean[1] += p[1];
        }
        // stationary mean of this system is (1/3, 1/3)
        let n = cloud.len() as f64;
        assert!((mean[0] / n - 1.0 / 3.0).abs() < 0.01);
        assert!((mean[1] / n - 1.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn chaos_game_deterministic() {
        let sys = scalar_system(
            &[0.5, 0.5],
            &[vec![0.0, 0.0], vec![0.5, 0.5]],
            2,
        );
        let a = chaos_game(&sys, &[0.5, 0.5], 70_000, 100, 42).unwrap();
        let b = chaos_game(&sys, &[0.5, 0.5], 70_000, 100, 42).unwrap();
        assert_eq!(a.coords(), b.coords());
    }

    #[test]
    fn chaos_game_guards() {
        let expanding = scalar_system(&[1.5], &[vec![0.0]], 1);
        assert!(matches!(
            chaos_game(&expanding, &[1.0], 10, 10, 0),
            Err(Error::Contraction(_))
        ));
        assert!(chaos_game_unchecked(&expanding, &[1.0], 4, 0, 0).is_ok());

        let sys = scalar_system(&[0.5, 0.5], &[vec![0.0], vec![1.0]], 1);
        assert!(chaos_game(&sys, &[0.7, 0.2], 10, 10, 0).is_err());
        assert!(chaos_game(&sys, &[0.5], 10, 10, 0).is_err());
    }

    #[test]
    fn cylinder_point_matches_affine_word() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sys = random_system(&mut rng, 2, 3, 0.6);
        let w = vec![1, 0, 2, 2, 1];
        let v0 = vec![0.3, -0.2];
        let direct = cylinder_point(&sys, &w, &v0).unwrap();
        let composed = affine_word(&sys, &w).unwrap().apply(&v0).unwrap();
        for (a, b) in direct.iter().zip(&composed) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn without_map_shrinks_alphabet() {
        let sys = scalar_system(
            &[0.5, 0.4, 0.3],
            &[vec![0.0], vec![1.0], vec![2.0]],
            1,
        );
        let sub = sys.without_map(1).unwrap();
        assert_eq!(sub.len(), 2);
        assert_eq!(sub.map(1).translation(), &[2.0]);
        assert!(scalar_system(&[0.5], &[vec![0.0]], 1).without_map(0).is_err());
    }
}
