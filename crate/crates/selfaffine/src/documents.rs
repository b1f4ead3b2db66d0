//! Serializable result and system documents. Every CLI command emits one
//! of these inside a {config, result} envelope; systems round-trip through
//! [`SystemDoc`].

use crate::error::{Error, Result};
use crate::families::{DominationCheck, PressureDrop, SumsetSystem};
use crate::geometry::BoxCountSeries;
use crate::ifs::{AffineMap, ContractionReport, IfsSystem};
use crate::linalg::Matrix;
use crate::measures::{LyapunovEstimate, OrbitLimitReport};
use crate::pressure::{DimensionEstimate, PressureEstimate};
use serde::{Deserialize, Serialize};

/// Sample lists longer than this are elided from documents, keeping only
/// a histogram.
pub const SAMPLE_ELIDE_THRESHOLD: usize = 10_000;

/// Bins used when a sample list is elided.
pub const HISTOGRAM_BINS: usize = 200;

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct MapDoc {
    /// Row-major d*d entries.
    pub linear: Vec<f64>,
    pub translation: Vec<f64>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct SystemDoc {
    pub dimension: usize,
    pub maps: Vec<MapDoc>,
}

impl From<&IfsSystem> for SystemDoc {
    fn from(sys: &IfsSystem) -> Self {
        SystemDoc {
            dimension: sys.dimension(),
            maps: sys
                .maps()
                .iter()
                .map(|m| MapDoc {
                    linear: m.linear().entries().to_vec(),
                    translation: m.translation().to_vec(),
                })
                .collect(),
        }
    }
}

impl SystemDoc {
    pub fn to_system(&self) -> Result<IfsSystem> {
        let d = self.dimension;
        let maps = self
            .maps
            .iter()
            .map(|doc| {
                if doc.linear.len() != d * d {
                    return Err(Error::invalid(format!(
                        "linear part has {} entries, expected {}",
                        doc.linear.len(),
                        d * d
                    )));
                }
                let m = Matrix::new(d, d, doc.linear.clone())?;
                AffineMap::new(m, doc.translation.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        IfsSystem::new(maps)
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct ContractionDoc {
    pub norms: Vec<f64>,
    pub max_norm: f64,
    pub max_pair_sum: f64,
    pub contracting: bool,
    pub falconer_ok: bool,
}

impl From<&ContractionReport> for ContractionDoc {
    fn from(r: &ContractionReport) -> Self {
        ContractionDoc {
            norms: r.norms.clone(),
            max_norm: r.max_norm,
            max_pair_sum: r.max_pair_sum,
            contracting: r.contracting,
            falconer_ok: r.falconer_ok,
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct PressureDoc {
    pub s: f64,
    pub depths: Vec<usize>,
    pub log_sums: Vec<f64>,
    pub per_n: Vec<f64>,
    pub diff_quotient: f64,
    /// Null unless the projection has full rank.
    pub rigorous_upper: Option<f64>,
}

impl From<&PressureEstimate> for PressureDoc {
    fn from(e: &PressureEstimate) -> Self {
        PressureDoc {
            s: e.s,
            depths: e.depths.clone(),
            log_sums: e.log_sums.clone(),
            per_n: e.per_n.clone(),
            diff_quotient: e.diff_quotient,
            rigorous_upper: e.rigorous_upper,
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct DimDoc {
    pub s_star: f64,
    pub bracket: [f64; 2],
    pub pressure_at_root: f64,
    pub saturated: bool,
}

impl From<&DimensionEstimate> for DimDoc {
    fn from(e: &DimensionEstimate) -> Self {
        DimDoc {
            s_star: e.s_star,
            bracket: [e.bracket.0, e.bracket.1],
            pressure_at_root: e.pressure_at_root,
            saturated: e.saturated,
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct LyapunovDoc {
    pub exponents: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub n: usize,
    pub trials: usize,
}

impl From<&LyapunovEstimate> for LyapunovDoc {
    fn from(e: &LyapunovEstimate) -> Self {
        LyapunovDoc {
            exponents: e.exponents.clone(),
            std_errors: e.std_errors.clone(),
            n: e.n,
            trials: e.trials,
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct HistogramDoc {
    pub lo: f64,
    pub hi: f64,
    pub bins: Vec<u64>,
}

impl HistogramDoc {
    pub fn from_samples(samples: &[f64], n_bins: usize) -> Self {
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut bins = vec![0u64; n_bins];
        let span = hi - lo;
        for &x in samples {
            let at = if span > 0.0 {
                ((((x - lo) / span) * n_bins as f64) as usize).min(n_bins - 1)
            } else {
                0
            };
            bins[at] += 1;
        }
        HistogramDoc { lo, hi, bins }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct OrbitReportDoc {
    pub n: usize,
    pub trials: usize,
    /// Per-orbit rates; null when the trial count exceeds the elision
    /// threshold, in which case the histogram carries the distribution.
    pub samples: Option<Vec<f64>>,
    pub histogram: HistogramDoc,
    pub cluster_means: Vec<f64>,
    pub cluster_weights: Vec<f64>,
    pub separation_score: f64,
}

impl From<&OrbitLimitReport> for OrbitReportDoc {
    fn from(r: &OrbitLimitReport) -> Self {
        let trials = r.samples.len();
        let histogram = HistogramDoc::from_samples(&r.samples, HISTOGRAM_BINS);
        let samples = if trials > SAMPLE_ELIDE_THRESHOLD {
            None
        } else {
            Some(r.samples.clone())
        };
        OrbitReportDoc {
            n: r.n,
            trials,
            samples,
            histogram,
            cluster_means: r.cluster_means.clone(),
            cluster_weights: r.cluster_weights.clone(),
            separation_score: r.separation_score,
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct BoxCountDoc {
    pub deltas: Vec<f64>,
    pub counts: Vec<usize>,
    pub fit_slope: f64,
    pub fit_r2: f64,
    pub degenerate: bool,
}

impl From<&BoxCountSeries> for BoxCountDoc {
    fn from(s: &BoxCountSeries) -> Self {
        BoxCountDoc {
            deltas: s.deltas.clone(),
            counts: s.counts.clone(),
            fit_slope: s.fit_slope,
            fit_r2: s.fit_r2,
            degenerate: s.degenerate,
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct DominationDoc {
    pub k1: usize,
    pub k2: usize,
    pub depth: usize,
    pub lhs1: f64,
    pub lhs2: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl DominationDoc {
    pub fn new(check: &DominationCheck, k1: usize, k2: usize, depth: usize) -> Self {
        DominationDoc {
            k1,
            k2,
            depth,
            lhs1: check.lhs1,
            lhs2: check.lhs2,
            rhs: check.rhs,
            pass: check.pass,
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct PressureDropDoc {
    pub depth: usize,
    pub p_q_at_s: f64,
    pub margin: f64,
}

impl PressureDropDoc {
    pub fn new(drop: &PressureDrop, depth: usize) -> Self {
        PressureDropDoc {
            depth,
            p_q_at_s: drop.p_q_at_s,
            margin: drop.margin,
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct SumsetDemoDoc {
    pub dim_a: DimDoc,
    pub dim_b: DimDoc,
    pub s_target: f64,
    pub domination: DominationDoc,
    pub pressure_drop: PressureDropDoc,
}

impl SumsetDemoDoc {
    pub fn new(
        ss: &SumsetSystem,
        domination: DominationDoc,
        pressure_drop: PressureDropDoc,
    ) -> Self {
        SumsetDemoDoc {
            dim_a: ss.dim_a().into(),
            dim_b: ss.dim_b().into(),
            s_target: ss.s_target(),
            domination,
            pressure_drop,
        }
    }
}

/// Error report printed to stderr by the CLI.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct ErrorDoc {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

impl From<&Error> for ErrorDoc {
    fn from(e: &Error) -> Self {
        ErrorDoc {
            kind: e.kind().to_string(),
            message: e.to_string(),
            exit_code: e.exit_code(),
        }
    }
}
