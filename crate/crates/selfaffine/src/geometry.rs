//! Point clouds, mesh-cube box counting, box-dimension regression, and
//! CSV/PPM export.

use crate::error::{Error, Result};
use crate::pressure::ProjectionMap;
use rayon::prelude::*;
use std::collections::HashSet;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// Points per parallel chunk when counting mesh cubes.
const COUNT_CHUNK: usize = 65_536;

/// Mesh indices past this magnitude lose integer exactness in f64.
const MAX_MESH_INDEX: f64 = 9.0e15;

/// A flat list of points in d-space.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dimension: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dimension: usize, coords: Vec<f64>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if coords.len() % dimension != 0 {
            return Err(Error::invalid("coordinate count not a multiple of dimension"));
        }
        if !coords.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("coordinates must be finite"));
        }
        Ok(PointCloud { dimension, coords })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.coords.len() / self.dimension
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dimension..(i + 1) * self.dimension]
    }

    /// Per-axis (min, max) over all points; `None` for an empty cloud.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.is_empty() {
            return None;
        }
        let d = self.dimension;
        let mut lo = self.coords[..d].to_vec();
        let mut hi = lo.clone();
        for p in self.coords.chunks_exact(d) {
            for j in 0..d {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        Some((lo, hi))
    }

    /// Diagonal length of the bounding box; 0 for empty or single-point clouds.
    pub fn diameter_bound(&self) -> f64 {
        match self.bounding_box() {
            None => 0.0,
            Some((lo, hi)) => lo
                .iter()
                .zip(&hi)
                .map(|(a, b)| (b - a) * (b - a))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

/// Apply a projection matrix to every point. The ambient dimension is
/// preserved; rank deficiency shows up in the affine hull of the output.
pub fn project_points(q: &ProjectionMap, cloud: &PointCloud) -> Result<PointCloud> {
    if q.dimension() != cloud.dimension() {
        return Err(Error::domain(format!(
            "projection dimension {} does not match cloud dimension {}",
            q.dimension(),
            cloud.dimension()
        )));
    }
    let d = cloud.dimension();
    let m = q.matrix();
    let mut out = Vec::with_capacity(cloud.coords.len());
    for p in cloud.coords.chunks_exact(d) {
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                acc += m.get(i, j) * p[j];
            }
            out.push(acc);
        }
    }
    PointCloud::new(d, out)
}

fn mesh_index(p: &[f64], delta: f64) -> Result<Vec<i64>> {
    let mut idx = Vec::with_capacity(p.len());
    for &x in p {
        let r = (x / delta).floor();
        if r.abs() > MAX_MESH_INDEX {
            return Err(Error::degenerate(format!(
                "mesh index {r} overflows at delta = {delta}"
            )));
        }
        idx.push(r as i64);
    }
    Ok(idx)
}

/// Number of distinct origin-anchored mesh cubes of side `delta` (the cube
/// at index k covers [k delta, (k+1) delta) per axis) containing at least
/// one point of the cloud.
pub fn box_count(cloud: &PointCloud, delta: f64) -> Result<usize> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::invalid("delta must be positive and finite"));
    }
    let d = cloud.dimension();
    let sets: Vec<Result<HashSet<Vec<i64>>>> = cloud
        .coords
        .par_chunks(COUNT_CHUNK * d)
        .map(|chunk| {
            let mut set = HashSet::new();
            for p in chunk.chunks_exact(d) {
                set.insert(mesh_index(p, delta)?);
            }
            Ok(set)
        })
        .collect();
    let mut all = HashSet::new();
    for s in sets {
        let s = s?;
        if all.is_empty() {
            all = s;
        } else {
            all.extend(s);
        }
    }
    Ok(all.len())
}

/// Box counts across a geometric range of scales with the least-squares
/// dimension fit.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxCountSeries {
    /// Scales, descending.
    pub deltas: Vec<f64>,
    pub counts: Vec<usize>,
    /// Slope of log count against log (1/delta): the dimension estimate.
    pub fit_slope: f64,
    pub fit_r2: f64,
    /// Set when every scale sees the same count, e.g. a single point;
    /// the slope is 0 and means nothing.
    pub degenerate: bool,
}

/// Default scale range for a cloud: diameter/16 down to diameter/1024.
pub fn default_delta_range(cloud: &PointCloud) -> Result<(f64, f64)> {
    let diam = cloud.diameter_bound();
    if diam <= 0.0 {
        return Err(Error::degenerate(
            "cloud has zero extent; pass an explicit delta range",
        ));
    }
    let hi = diam / 16.0;
    Ok((hi, hi / 64.0))
}

/// Count mesh cubes at `n_scales` geometric scales from `delta_hi` down to
/// `delta_lo` and fit log count against log (1/delta).
pub fn box_dim_fit(
    cloud: &PointCloud,
    delta_hi: f64,
    delta_lo: f64,
    n_scales: usize,
) -> Result<BoxCountSeries> {
    if !(delta_lo > 0.0) || !(delta_hi > delta_lo) {
        return Err(Error::invalid("need 0 < delta_lo < delta_hi"));
    }
    if n_scales < 4 {
        return Err(Error::invalid("need at least 4 scales"));
    }
    if cloud.is_empty() {
        return Err(Error::degenerate("cannot fit a dimension to an empty cloud"));
    }
    let ratio = delta_lo / delta_hi;
    let deltas: Vec<f64> = (0..n_scales)
        .map(|i| delta_hi * ratio.powf(i as f64 / (n_scales - 1) as f64))
        .collect();
    let counts: Vec<usize> = deltas
        .iter()
        .map(|&delta| box_count(cloud, delta))
        .collect::<Result<_>>()?;

    let degenerate = counts.windows(2).all(|w| w[0] == w[1]);
    if degenerate {
        return Ok(BoxCountSeries {
            deltas,
            counts,
            fit_slope: 0.0,
            fit_r2: 1.0,
            degenerate: true,
        });
    }

    // least squares of y = ln count against x = ln (1/delta)
    let xs: Vec<f64> = deltas.iter().map(|&d| (1.0 / d).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let m = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / m;
    let mean_y = ys.iter().sum::<f64>() / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    let slope = sxy / sxx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let fitted = mean_y + slope * (x - mean_x);
            (y - fitted) * (y - fitted)
        })
        .sum();
    let fit_r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(BoxCountSeries {
        deltas,
        counts,
        fit_slope: slope,
        fit_r2,
        degenerate: false,
    })
}

/// Write the cloud as CSV: header `x0,x1,...`, one point per row, floats
/// with 17 significant digits so a round trip is bit-exact.
pub fn export_csv(cloud: &PointCloud, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let d = cloud.dimension();
    let header: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for p in cloud.coords.chunks_exact(d) {
        let row: Vec<String> = p.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Read a cloud back from [`export_csv`]'s format.
pub fn import_csv(path: &Path) -> Result<PointCloud> {
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty csv".into()))??;
    let d = header.split(',').count();
    let mut coords = Vec::new();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d {
            return Err(Error::Parse(format!(
                "row has {} fields, header has {d}",
                fields.len()
            )));
        }
        for f in fields {
            coords.push(
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad float {f:?}: {e}")))?,
            );
        }
    }
    PointCloud::new(d, coords)
}

/// Render two axes of the cloud as a binary PPM (P6): white background,
/// hit pixels black, points binned over the bounding box of those axes.
pub fn export_ppm(
    cloud: &PointCloud,
    path: &Path,
    width: usize,
    height: usize,
    axes: (usize, usize),
) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::invalid("raster dimensions must be positive"));
    }
    let d = cloud.dimension();
    if axes.0 >= d || axes.1 >= d {
        return Err(Error::invalid(format!(
            "axes {axes:?} out of range for dimension {d}"
        )));
    }
    let mut pixels = vec![255u8; width * height * 3];
    if !cloud.is_empty() {
        let (lo, hi) = cloud.bounding_box().expect("nonempty");
        let (ax, ay) = axes;
        let span_x = hi[ax] - lo[ax];
        let span_y = hi[ay] - lo[ay];
        let bin = |v: f64, lo: f64, span: f64, cells: usize| -> usize {
            if span <= 0.0 {
                return cells / 2;
            }
            (((v - lo) / span * cells as f64) as usize).min(cells - 1)
        };
        for p in cloud.coords.chunks_exact(d) {
            let px = bin(p[ax], lo[ax], span_x, width);
            let py = bin(p[ay], lo[ay], span_y, height);
            // larger axis values point up the image
            let row = height - 1 - py;
            let at = (row * width + px) * 3;
            pixels[at] = 0;
            pixels[at + 1] = 0;
            pixels[at + 2] = 0;
        }
    }
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    write!(w, "P6\n{width} {height}\n255\n")?;
    w.write_all(&pixels)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid_cloud(m: usize, spacing: f64) -> PointCloud {
        // m x m points at cell centers: (i + 0.5) * spacing
        let mut coords = Vec::with_capacity(m * m * 2);
        for i in 0..m {
            for j in 0..m {
                coords.push((i as f64 + 0.5) * spacing);
                coords.push((j as f64 + 0.5) * spacing);
            }
        }
        PointCloud::new(2, coords).unwrap()
    }

    #[test]
    fn project_identity_and_rank_one() {
        let cloud = PointCloud::new(2, vec![0.3, 0.7, -1.2, 2.5]).unwrap();
        let same = project_points(&ProjectionMap::identity(2), &cloud).unwrap();
        assert_eq!(same, cloud);
        let q = ProjectionMap::coord(2, 1).unwrap();
        let flat = project_points(&q, &cloud).unwrap();
        assert_eq!(flat.dimension(), 2);
        assert_eq!(flat.point(0), &[0.3, 0.0]);
        assert_eq!(flat.point(1), &[-1.2, 0.0]);
    }

    #[test]
    fn project_matches_matrix_vector_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = Matrix::new(3, 3, data).unwrap();
        let q = ProjectionMap::new(m.clone()).unwrap();
        let p = vec![0.1, -0.4, 0.9];
        let cloud = PointCloud::new(3, p.clone()).unwrap();
        let out = project_points(&q, &cloud).unwrap();
        let direct = m.apply(&p).unwrap();
        assert_eq!(out.point(0), direct.as_slice());
    }

    #[test]
    fn box_count_small_cases() {
        let one = PointCloud::new(2, vec![0.25, 0.25]).unwrap();
        assert_eq!(box_count(&one, 1.0).unwrap(), 1);
        let same_cube = PointCloud::new(2, vec![0.1, 0.1, 0.4, 0.45]).unwrap();
        assert_eq!(box_count(&same_cube, 1.0).unwrap(), 1);
        let straddle = PointCloud::new(2, vec![0.9, 0.5, 1.1, 0.5]).unwrap();
        assert_eq!(box_count(&straddle, 1.0).unwrap(), 2);
        // negative coordinates land in their own cubes
        let neg = PointCloud::new(1, vec![-0.5, 0.5]).unwrap();
        assert_eq!(box_count(&neg, 1.0).unwrap(), 2);
    }

    #[test]
    fn box_count_uniform_grid() {
        let m = 8;
        let cloud = grid_cloud(m, 0.125);
        assert_eq!(box_count(&cloud, 0.125).unwrap(), m * m);
    }

    #[test]
    fn box_count_refines_monotonically() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coords: Vec<f64> = (0..2000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cloud = PointCloud::new(2, coords).unwrap();
        let coarse = box_count(&cloud, 0.25).unwrap();
        let fine = box_count(&cloud, 0.125).unwrap();
        assert!(fine >= coarse);
    }

    #[test]
    fn fit_recovers_plane_dimension() {
        // 256 x 256 grid: counts are exact powers until delta nears spacing
        let cloud = grid_cloud(256, 1.0 / 256.0);
        let series = box_dim_fit(&cloud, 0.25, 0.25 / 16.0, 5).unwrap();
        assert!(
            (series.fit_slope - 2.0).abs() < 0.01,
            "slope {}",
            series.fit_slope
        );
        assert!(series.fit_r2 > 0.9999);
        assert!(!series.degenerate);
    }

    #[test]
    fn fit_recovers_segment_dimension() {
        let n = 20_000;
        let coords: Vec<f64> = (0..n)
            .flat_map(|i| {
                let t = i as f64 / n as f64;
                [t, t]
            })
            .collect();
        let cloud = PointCloud::new(2, coords).unwrap();
        let series = box_dim_fit(&cloud, 1.0 / 8.0, 1.0 / 128.0, 5).unwrap();
        assert!(
            (series.fit_slope - 1.0).abs() < 0.1,
            "slope {}",
            series.fit_slope
        );
    }

    #[test]
    fn single_point_is_degenerate() {
        let cloud = PointCloud::new(2, vec![0.4, 0.6]).unwrap();
        let series = box_dim_fit(&cloud, 1.0, 1.0 / 64.0, 5).unwrap();
        assert_eq!(series.fit_slope, 0.0);
        assert!(series.degenerate);
        assert!(default_delta_range(&cloud).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cloud.csv");
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let coords: Vec<f64> = (0..300).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let cloud = PointCloud::new(3, coords).unwrap();
        export_csv(&cloud, &path).unwrap();
        let back = import_csv(&path).unwrap();
        assert_eq!(cloud, back);
    }

    #[test]
    fn empty_csv_has_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        let cloud = PointCloud::new(2, vec![]).unwrap();
        export_csv(&cloud, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "x0,x1\n");
        let back = import_csv(&path).unwrap();
        assert!(back.is_empty());
        assert_eq!(back.dimension(), 2);
    }

    #[test]
    fn ppm_single_point_single_black_pixel() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dot.ppm");
        let cloud = PointCloud::new(2, vec![0.5, 0.5]).unwrap();
        export_ppm(&cloud, &path, 8, 4, (0, 1)).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header = b"P6\n8 4\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        let body = &bytes[header.len()..];
        assert_eq!(body.len(), 8 * 4 * 3);
        let black = body.chunks(3).filter(|px| px == &[0, 0, 0]).count();
        assert_eq!(black, 1);
    }

    #[test]
    fn count_is_chunking_independent() {
        // more points than one parallel chunk, duplicated across chunks
        let mut coords = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let base: Vec<(f64, f64)> = (0..100)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        for i in 0..70_000 {
            let (x, y) = base[i % 100];
            coords.push(x);
            coords.push(y);
        }
        let cloud = PointCloud::new(2, coords).unwrap();
        let n = box_count(&cloud, 0.05).unwrap();
        let direct = {
            let mut set = HashSet::new();
            for (x, y) in &base {
                set.insert(((x / 0.05).floor() as i64, (y / 0.05).floor() as i64));
            }
            set.len()
        };
        assert_eq!(n, direct);
    }
}
