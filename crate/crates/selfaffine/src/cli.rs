//! Experiment configuration and the command layer behind the binary.
//!
//! Every command takes one [`ExperimentConfig`] (usually parsed from a JSON
//! file with flag overrides applied on top), resolves defaults, and returns
//! a single JSON document of the form {"config": ..., "result": ...} where
//! `config` echoes the settings the run actually used.

use crate::acceptance;
use crate::documents::{
    BoxCountDoc, DimDoc, DominationDoc, LyapunovDoc, MapDoc, OrbitReportDoc, PressureDoc,
    PressureDropDoc, SumsetDemoDoc, SystemDoc,
};
use crate::error::{Error, Result};
use crate::families::{
    domination_check, gen_perm_demo, gen_perm_example, sumset_demo, sumset_pressure_drop,
    tensor_example,
};
use crate::geometry::{self, default_delta_range, PointCloud};
use crate::ifs::{chaos_game, chaos_game_unchecked, IfsSystem};
use crate::linalg::Matrix;
use crate::measures::{
    exactness_diagnostic_with, lyapunov_exponents, BernoulliMeasure, MarkovWordSource, WordSource,
};
use crate::pressure::{self, ProjectionMap, DEFAULT_BUDGET, DEFAULT_DIM_TOL};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;

pub const DEFAULT_N_MAX: usize = 12;
pub const DEFAULT_DIM_DEPTH: usize = 8;
pub const DEFAULT_RENDER_POINTS: usize = 200_000;
pub const DEFAULT_BURN_IN: usize = 100;
pub const DEFAULT_ORBIT_LEN: usize = 2000;
pub const DEFAULT_EXACTNESS_TRIALS: usize = 500;
pub const DEFAULT_LYAP_LEN: usize = 1000;
pub const DEFAULT_LYAP_TRIALS: usize = 100;
pub const DEFAULT_N_SCALES: usize = 7;
pub const DEFAULT_RASTER: usize = 800;
pub const DEFAULT_SUMSET_DEPTH: usize = 3;
pub const DEFAULT_SUMSET_K: usize = 2;

/// How a config names its system: an inline document or a constructor.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SystemSpec {
    Explicit {
        dimension: usize,
        maps: Vec<MapDoc>,
    },
    GenPerm {
        d: usize,
        entry_low: f64,
        entry_high: f64,
        n_maps: usize,
        seed: u64,
    },
    Tensor {
        d1: usize,
        d2: usize,
        n_maps: usize,
        scale: f64,
        seed: u64,
    },
    /// Frozen two-map generalized permutation demo with its word source.
    GenPermDemo,
    /// Frozen direct-sum demo; the system is the product on the doubled
    /// space.
    SumsetDemo,
}

/// A projection: a named preset ("identity", "coord:K", "sum-block") or an
/// explicit square matrix given as rows.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(untagged)]
pub enum ProjectionSpec {
    Preset(String),
    Matrix(Vec<Vec<f64>>),
}

/// One flat configuration shared by all commands; each command reads the
/// fields it needs and fills the rest of its defaults into the echoed copy.
#[derive(Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projection: Option<ProjectionSpec>,
    /// Letter probabilities; uniform when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_min: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    /// Word depth for dimension estimates and the sumset checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Word length for orbit statistics.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbit_len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_scales: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    /// Raster axes for PPM export.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axes: Option<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k1: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k2: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_ppm: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_csv: Option<String>,
    /// Sample the chaos game even when the system is not contracting.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub force: Option<bool>,
}

/// Parse a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("config: {e}")))
}

struct Resolved {
    system: IfsSystem,
    /// The demo's word source, when the system carries one.
    source: Option<MarkovWordSource>,
    /// A projection the system is naturally paired with.
    implied_projection: Option<ProjectionSpec>,
}

fn resolve_system(cfg: &ExperimentConfig) -> Result<Resolved> {
    let spec = cfg
        .system
        .as_ref()
        .ok_or_else(|| Error::invalid("config needs a system"))?;
    let plain = |system: IfsSystem| Resolved {
        system,
        source: None,
        implied_projection: None,
    };
    Ok(match spec {
        SystemSpec::Explicit { dimension, maps } => plain(
            SystemDoc {
                dimension: *dimension,
                maps: maps.clone(),
            }
            .to_system()?,
        ),
        SystemSpec::GenPerm {
            d,
            entry_low,
            entry_high,
            n_maps,
            seed,
        } => plain(gen_perm_example(*d, *entry_low, *entry_high, *n_maps, *seed)?),
        SystemSpec::Tensor {
            d1,
            d2,
            n_maps,
            scale,
            seed,
        } => plain(tensor_example(*d1, *d2, *n_maps, *scale, *seed)?),
        SystemSpec::GenPermDemo => {
            let demo = gen_perm_demo();
            Resolved {
                system: demo.system,
                source: Some(demo.source),
                implied_projection: Some(ProjectionSpec::Preset("coord:1".into())),
            }
        }
        SystemSpec::SumsetDemo => {
            let ss = sumset_demo()?;
            Resolved {
                system: ss.product().clone(),
                source: None,
                implied_projection: Some(ProjectionSpec::Preset("sum-block".into())),
            }
        }
    })
}

/// Materialize a projection spec against ambient dimension `d`.
pub fn resolve_projection(spec: Option<&ProjectionSpec>, d: usize) -> Result<ProjectionMap> {
    match spec {
        None => Ok(ProjectionMap::identity(d)),
        Some(ProjectionSpec::Preset(name)) => {
            if name == "identity" {
                Ok(ProjectionMap::identity(d))
            } else if let Some(rest) = name.strip_prefix("coord:") {
                let k: usize = rest
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad coordinate count in {name:?}")))?;
                ProjectionMap::coord(d, k)
            } else if name == "sum-block" {
                if d % 2 != 0 {
                    return Err(Error::invalid(
                        "sum-block projection needs an even ambient dimension",
                    ));
                }
                ProjectionMap::sum_block(d / 2)
            } else {
                Err(Error::invalid(format!("unknown projection preset {name:?}")))
            }
        }
        Some(ProjectionSpec::Matrix(rows)) => {
            let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let m = Matrix::from_rows(&refs)?;
            if m.rows() != d || m.cols() != d {
                return Err(Error::invalid(format!(
                    "projection matrix must be {d}x{d}, got {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
            ProjectionMap::new(m)
        }
    }
}

fn resolve_probs(cfg: &ExperimentConfig, n_maps: usize) -> Result<Vec<f64>> {
    match &cfg.probs {
        Some(p) => Ok(p.clone()),
        None => Ok(vec![1.0 / n_maps as f64; n_maps]),
    }
}

fn envelope<T: Serialize>(config: &ExperimentConfig, result: &T) -> Value {
    serde_json::json!({ "config": config, "result": result })
}

/// Projected pressure at one s over a depth range.
pub fn cmd_pressure(config: &ExperimentConfig) -> Result<Value> {
    let resolved = resolve_system(config)?;
    let d = resolved.system.dimension();
    let mut cfg = config.clone();
    let s = cfg
        .s
        .ok_or_else(|| Error::invalid("pressure needs a moment parameter s"))?;
    let q = resolve_projection(cfg.projection.as_ref(), d)?;
    let n_max = *cfg.n_max.get_or_insert(DEFAULT_N_MAX);
    let n_min = *cfg.n_min.get_or_insert(1);
    let budget = *cfg.budget.get_or_insert(DEFAULT_BUDGET);
    cfg.projection
        .get_or_insert(ProjectionSpec::Preset("identity".into()));
    let est = pressure::pressure_budgeted(&resolved.system, &q, s, n_min, n_max, budget)?;
    Ok(envelope(&cfg, &PressureDoc::from(&est)))
}

/// Projected affinity dimension by bisection at one depth.
pub fn cmd_dim(config: &ExperimentConfig) -> Result<Value> {
    let resolved = resolve_system(config)?;
    let d = resolved.system.dimension();
    let mut cfg = config.clone();
    let q = resolve_projection(cfg.projection.as_ref(), d)?;
    let default_depth = DEFAULT_DIM_DEPTH.max(pressure::min_root_depth(&resolved.system, &q)?);
    let depth = *cfg.depth.get_or_insert(default_depth);
    let tol = *cfg.tol.get_or_insert(DEFAULT_DIM_TOL);
    let budget = *cfg.budget.get_or_insert(DEFAULT_BUDGET);
    cfg.projection
        .get_or_insert(ProjectionSpec::Preset("identity".into()));
    let est = pressure::dim_aff_q_budgeted(&resolved.system, &q, depth, tol, budget)?;
    Ok(envelope(&cfg, &DimDoc::from(&est)))
}

fn sample_cloud(cfg: &mut ExperimentConfig, system: &IfsSystem) -> Result<PointCloud> {
    let n_points = *cfg.n_points.get_or_insert(DEFAULT_RENDER_POINTS);
    let burn_in = *cfg.burn_in.get_or_insert(DEFAULT_BURN_IN);
    let seed = *cfg.seed.get_or_insert(0);
    let probs = resolve_probs(cfg, system.len())?;
    cfg.probs.get_or_insert(probs.clone());
    let force = *cfg.force.get_or_insert(false);
    if force {
        chaos_game_unchecked(system, &probs, n_points, burn_in, seed)
    } else {
        chaos_game(system, &probs, n_points, burn_in, seed)
    }
}

/// Run the chaos game and export the (optionally projected) cloud.
pub fn cmd_render(config: &ExperimentConfig) -> Result<Value> {
    let resolved = resolve_system(config)?;
    let mut cfg = config.clone();
    let cloud = sample_cloud(&mut cfg, &resolved.system)?;
    let cloud = match &cfg.projection {
        Some(spec) => {
            let q = resolve_projection(Some(spec), resolved.system.dimension())?;
            geometry::project_points(&q, &cloud)?
        }
        None => cloud,
    };
    if cfg.out_ppm.is_none() && cfg.out_csv.is_none() {
        cfg.out_ppm = Some("attractor.ppm".into());
    }
    let width = *cfg.width.get_or_insert(DEFAULT_RASTER);
    let height = *cfg.height.get_or_insert(DEFAULT_RASTER);
    let axes = *cfg.axes.get_or_insert((0, 1));
    if let Some(path) = &cfg.out_ppm {
        geometry::export_ppm(&cloud, Path::new(path), width, height, axes)?;
    }
    if let Some(path) = &cfg.out_csv {
        geometry::export_csv(&cloud, Path::new(path))?;
    }
    let bbox = cloud.bounding_box();
    let result = serde_json::json!({
        "n_points": cloud.len(),
        "bounding_box": bbox.map(|(lo, hi)| serde_json::json!({"lo": lo, "hi": hi})),
        "ppm": cfg.out_ppm,
        "csv": cfg.out_csv,
    });
    Ok(envelope(&cfg, &result))
}

/// Chaos game plus box-counting dimension fit.
pub fn cmd_boxdim(config: &ExperimentConfig) -> Result<Value> {
    let resolved = resolve_system(config)?;
    let mut cfg = config.clone();
    let cloud = sample_cloud(&mut cfg, &resolved.system)?;
    let cloud = match &cfg.projection {
        Some(spec) => {
            let q = resolve_projection(Some(spec), resolved.system.dimension())?;
            geometry::project_points(&q, &cloud)?
        }
        None => cloud,
    };
    let (hi_default, lo_default) = match (cfg.delta_hi, cfg.delta_lo) {
        (Some(hi), Some(lo)) => (hi, lo),
        _ => {
            let (hi, lo) = default_delta_range(&cloud)?;
            (cfg.delta_hi.unwrap_or(hi), cfg.delta_lo.unwrap_or(lo))
        }
    };
    cfg.delta_hi = Some(hi_default);
    cfg.delta_lo = Some(lo_default);
    let n_scales = *cfg.n_scales.get_or_insert(DEFAULT_N_SCALES);
    let series = geometry::box_dim_fit(&cloud, hi_default, lo_default, n_scales)?;
    Ok(envelope(&cfg, &BoxCountDoc::from(&series)))
}

/// Monte Carlo Lyapunov spectrum under a Bernoulli measure.
pub fn cmd_lyapunov(config: &ExperimentConfig) -> Result<Value> {
    let resolved = resolve_system(config)?;
    let mut cfg = config.clone();
    let probs = resolve_probs(&cfg, resolved.system.len())?;
    cfg.probs.get_or_insert(probs.clone());
    let mu = BernoulliMeasure::new(probs)?;
    let n = *cfg.orbit_len.get_or_insert(DEFAULT_LYAP_LEN);
    let trials = *cfg.trials.get_or_insert(DEFAULT_LYAP_TRIALS);
    let seed = *cfg.seed.get_or_insert(0);
    let est = lyapunov_exponents(&resolved.system, &mu, n, trials, seed)?;
    Ok(envelope(&cfg, &LyapunovDoc::from(&est)))
}

/// Per-orbit scaling rates under a projection, with cluster structure.
/// The frozen demo system defaults to its own word source and projection;
/// anything else samples Bernoulli words.
pub fn cmd_exactness(config: &ExperimentConfig) -> Result<Value> {
    let resolved = resolve_system(config)?;
    let d = resolved.system.dimension();
    let mut cfg = config.clone();
    if cfg.projection.is_none() {
        cfg.projection = resolved
            .implied_projection
            .clone()
            .or(Some(ProjectionSpec::Preset("identity".into())));
    }
    let q = resolve_projection(cfg.projection.as_ref(), d)?;
    let source = match &resolved.source {
        Some(markov) => {
            if cfg.probs.is_some() {
                return Err(Error::invalid(
                    "the demo system carries its own word source; drop probs",
                ));
            }
            WordSource::Markov(markov.clone())
        }
        None => {
            let probs = resolve_probs(&cfg, resolved.system.len())?;
            cfg.probs.get_or_insert(probs.clone());
            WordSource::Bernoulli(BernoulliMeasure::new(probs)?)
        }
    };
    let n = *cfg.orbit_len.get_or_insert(DEFAULT_ORBIT_LEN);
    let trials = *cfg.trials.get_or_insert(DEFAULT_EXACTNESS_TRIALS);
    let seed = *cfg.seed.get_or_insert(0);
    let report = exactness_diagnostic_with(&resolved.system, &q, &source, n, trials, seed)?;
    Ok(envelope(&cfg, &OrbitReportDoc::from(&report)))
}

/// Run the frozen sumset demo: factor dimensions, gap domination check,
/// and the projected pressure drop at the combined dimension.
pub fn cmd_sumset_demo(config: &ExperimentConfig) -> Result<Value> {
    match &config.system {
        None | Some(SystemSpec::SumsetDemo) => {}
        Some(_) => {
            return Err(Error::invalid(
                "sumset-demo runs the frozen construction; drop the system field",
            ))
        }
    }
    let mut cfg = config.clone();
    cfg.system = Some(SystemSpec::SumsetDemo);
    let depth = *cfg.depth.get_or_insert(DEFAULT_SUMSET_DEPTH);
    let k1 = *cfg.k1.get_or_insert(DEFAULT_SUMSET_K);
    let k2 = *cfg.k2.get_or_insert(DEFAULT_SUMSET_K);
    let ss = sumset_demo()?;
    let check = domination_check(&ss, k1, k2, depth)?;
    let drop = sumset_pressure_drop(&ss, depth)?;
    let doc = SumsetDemoDoc::new(
        &ss,
        DominationDoc::new(&check, k1, k2, depth),
        PressureDropDoc::new(&drop, depth),
    );
    Ok(envelope(&cfg, &doc))
}

/// Run the acceptance suite; the result lists each criterion's verdict.
pub fn cmd_selftest(config: &ExperimentConfig) -> Result<Value> {
    let results = acceptance::run_all();
    let all_passed = results.iter().all(|r| r.passed);
    let criteria: Vec<Value> = results
        .iter()
        .map(|r| {
            serde_json::json!({
                "index": r.index,
                "name": r.name,
                "passed": r.passed,
                "detail": r.detail,
            })
        })
        .collect();
    let result = serde_json::json!({
        "criteria": criteria,
        "all_passed": all_passed,
    });
    Ok(envelope(config, &result))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_config() -> ExperimentConfig {
        let maps = (0..3)
            .map(|k| MapDoc {
                linear: vec![1.0 / 3.0, 0.0, 0.0, 1.0 / 3.0],
                translation: vec![k as f64, 0.0],
            })
            .collect();
        ExperimentConfig {
            system: Some(SystemSpec::Explicit {
                dimension: 2,
                maps,
            }),
            ..Default::default()
        }
    }

    #[test]
    fn config_rejects_unknown_fields() {
        let err = serde_json::from_str::<ExperimentConfig>("{\"n_max\": 5, \"bogus\": 1}");
        assert!(err.is_err());
        let ok = serde_json::from_str::<ExperimentConfig>("{\"n_max\": 5}").unwrap();
        assert_eq!(ok.n_max, Some(5));
    }

    #[test]
    fn projection_presets_resolve() {
        assert_eq!(resolve_projection(None, 3).unwrap().rank(), 3);
        let p = ProjectionSpec::Preset("coord:1".into());
        assert_eq!(resolve_projection(Some(&p), 2).unwrap().rank(), 1);
        let p = ProjectionSpec::Preset("sum-block".into());
        assert_eq!(resolve_projection(Some(&p), 4).unwrap().rank(), 2);
        let p = ProjectionSpec::Preset("sum-block".into());
        assert!(resolve_projection(Some(&p), 3).is_err());
        let p = ProjectionSpec::Preset("nope".into());
        assert!(resolve_projection(Some(&p), 2).is_err());
        let p = ProjectionSpec::Matrix(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(resolve_projection(Some(&p), 2).unwrap().rank(), 2);
        let p = ProjectionSpec::Matrix(vec![vec![1.0, 0.0]]);
        assert!(resolve_projection(Some(&p), 2).is_err());
    }

    #[test]
    fn pressure_command_fills_defaults_and_matches_library() {
        let mut cfg = scalar_config();
        cfg.s = Some(1.0);
        cfg.n_max = Some(5);
        let out = cmd_pressure(&cfg).unwrap();
        let echoed = &out["config"];
        assert_eq!(echoed["n_min"], 1);
        assert_eq!(echoed["budget"], DEFAULT_BUDGET);
        // 3 maps at ratio 1/3, s = 1: every per-word value is 3^-n, so the
        // pressure vanishes at each depth
        let dq = out["result"]["diff_quotient"].as_f64().unwrap();
        assert!(dq.abs() < 1e-12, "diff quotient {dq}");
        let per_n = out["result"]["per_n"].as_array().unwrap();
        assert_eq!(per_n.len(), 5);
    }

    #[test]
    fn pressure_requires_s() {
        let cfg = scalar_config();
        assert!(matches!(cmd_pressure(&cfg), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn dim_command_recovers_scalar_dimension() {
        let mut cfg = scalar_config();
        cfg.depth = Some(4);
        cfg.tol = Some(1e-8);
        let out = cmd_dim(&cfg).unwrap();
        let s_star = out["result"]["s_star"].as_f64().unwrap();
        assert!((s_star - 1.0).abs() < 1e-6, "s_star {s_star}");
        assert_eq!(out["result"]["saturated"], false);
    }

    #[test]
    fn exactness_demo_defaults_to_its_projection_and_splits() {
        let cfg = ExperimentConfig {
            system: Some(SystemSpec::GenPermDemo),
            orbit_len: Some(300),
            trials: Some(100),
            ..Default::default()
        };
        let out = cmd_exactness(&cfg).unwrap();
        assert_eq!(out["config"]["projection"], "coord:1");
        let means = out["result"]["cluster_means"].as_array().unwrap();
        assert_eq!(means.len(), 2);
        let score = out["result"]["separation_score"].as_f64().unwrap();
        assert!(score >= 5.0);
    }

    #[test]
    fn exactness_demo_rejects_probs_override() {
        let cfg = ExperimentConfig {
            system: Some(SystemSpec::GenPermDemo),
            probs: Some(vec![0.5, 0.5]),
            ..Default::default()
        };
        assert!(cmd_exactness(&cfg).is_err());
    }

    #[test]
    fn render_writes_requested_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let ppm = dir.path().join("out.ppm");
        let csv = dir.path().join("out.csv");
        let mut cfg = scalar_config();
        cfg.n_points = Some(500);
        cfg.width = Some(32);
        cfg.height = Some(32);
        cfg.out_ppm = Some(ppm.to_str().unwrap().to_string());
        cfg.out_csv = Some(csv.to_str().unwrap().to_string());
        let out = cmd_render(&cfg).unwrap();
        assert_eq!(out["result"]["n_points"], 500);
        let bytes = std::fs::read(&ppm).unwrap();
        assert!(bytes.starts_with(b"P6\n32 32\n255\n"));
        let reloaded = geometry::import_csv(&csv).unwrap();
        assert_eq!(reloaded.len(), 500);
    }

    #[test]
    fn boxdim_command_fits_a_plausible_slope() {
        let mut cfg = scalar_config();
        cfg.n_points = Some(30_000);
        cfg.seed = Some(4);
        let out = cmd_boxdim(&cfg).unwrap();
        let slope = out["result"]["fit_slope"].as_f64().unwrap();
        assert!(slope > 0.5 && slope < 1.5, "slope {slope}");
        assert_eq!(out["config"]["n_scales"], DEFAULT_N_SCALES);
    }

    #[test]
    fn lyapunov_command_on_scalar_system() {
        let mut cfg = scalar_config();
        cfg.orbit_len = Some(200);
        cfg.trials = Some(3);
        let out = cmd_lyapunov(&cfg).unwrap();
        let exps = out["result"]["exponents"].as_array().unwrap();
        let expected = (1.0f64 / 3.0).ln();
        for e in exps {
            assert!((e.as_f64().unwrap() - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn sumset_demo_command_shape() {
        let cfg = ExperimentConfig {
            depth: Some(2),
            ..Default::default()
        };
        let out = cmd_sumset_demo(&cfg).unwrap();
        assert_eq!(out["result"]["domination"]["pass"], true);
        let margin = out["result"]["pressure_drop"]["margin"].as_f64().unwrap();
        assert!(margin > 0.02);
        let bad = ExperimentConfig {
            system: Some(SystemSpec::GenPermDemo),
            ..Default::default()
        };
        assert!(cmd_sumset_demo(&bad).is_err());
    }

    #[test]
    fn command_output_is_byte_deterministic() {
        let mut cfg = scalar_config();
        cfg.s = Some(0.8);
        cfg.n_max = Some(6);
        let a = serde_json::to_string(&cmd_pressure(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&cmd_pressure(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
