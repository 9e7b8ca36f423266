use std::fmt;

use rayon::prelude::*;

use super::config::{ExperimentConfig, LambdaRule, Mode};
use super::fit::{fit_slope, regress};
use crate::backbones::{build_access, build_arterial, build_highways, default_c, default_kappa, ArKind, HighwaySystem};
use crate::bounds::{self, Inputs};
use crate::channel::ChannelParams;
use crate::percolation::{cluster_with, exterior_stats, radius_for_gamma, tail_rate};
use crate::routing::{evaluate_scheme, generate_sessions, load_map, Layer, RoutingTree, Router, Scheme};
use crate::spatial::sample_deployment;
use crate::{Error, Result};

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v}"),
            Value::Text(s) => f.write_str(s),
            Value::Empty => Ok(()),
        }
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v as i64)
    }
}

impl From<u32> for Value {
    fn from(v: u32) -> Self {
        Value::Int(i64::from(v))
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Empty, Into::into)
    }
}

/// Log-log slope of one metric against `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    /// Scheme, gamma or other grouping label.
    pub group: String,
    pub metric: String,
    pub slope: f64,
    pub stderr: f64,
    pub points: usize,
}

/// Rows of one run plus the fitted slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub mode: Mode,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    /// Rows whose status is not `ok`.
    pub failed: usize,
    pub slopes: Vec<SlopeFit>,
    /// Sweep mode only: every ratio within the slack and the log-ratio trend
    /// within tolerance.
    pub tight: Option<bool>,
}

impl SweepResult {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    /// Float cells of column `name`, `None` where empty or not numeric.
    pub fn floats(&self, name: &str) -> Vec<Option<f64>> {
        let Some(c) = self.column(name) else { return Vec::new() };
        self.rows
            .iter()
            .map(|r| match r[c] {
                Value::Float(v) => Some(v),
                Value::Int(v) => Some(v as f64),
                _ => None,
            })
            .collect()
    }
}

const STATUS: &str = "status";
const OK: &str = "ok";

fn failed_row(key: Vec<Value>, width: usize, e: &Error) -> Vec<Value> {
    let mut row = key;
    row.resize(width - 1, Value::Empty);
    row.push(Value::Text(format!("failed: {e}")));
    row
}

fn channel(cfg: &ExperimentConfig) -> Result<ChannelParams> {
    ChannelParams::new(cfg.power, cfg.noise, 1.0, cfg.alpha, cfg.attenuation())
}

fn highway_params(cfg: &ExperimentConfig) -> Result<(f64, f64)> {
    let c = cfg.c.unwrap_or_else(default_c);
    let kappa = match cfg.kappa {
        Some(k) => k,
        None => default_kappa(c).ok_or_else(|| Error::config("c", format!("{c} gives an open probability <= 5/6")))?,
    };
    Ok((c, kappa))
}

fn cells(cfg: &ExperimentConfig) -> Vec<(usize, u64)> {
    cfg.ns
        .iter()
        .flat_map(|&n| cfg.seeds.iter().map(move |&s| (n, s)))
        .collect()
}

/// Runs the pipeline selected by `cfg.mode`.
///
/// Cells are evaluated in parallel and assembled in `(n, seed, scheme)`
/// order, so the rows do not depend on scheduling. A cell whose
/// construction fails yields failed rows and the run continues.
pub fn run(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    if cfg.mode == Mode::Backbone || cfg.schemes.iter().any(|s| s.uses_highways()) && matches!(cfg.mode, Mode::Route | Mode::Simulate) {
        highway_params(cfg)?;
    }
    let mut result = match cfg.mode {
        Mode::Deploy => deploy(cfg),
        Mode::Percolate => percolate(cfg),
        Mode::Backbone => backbone(cfg)?,
        Mode::Route => route(cfg)?,
        Mode::Simulate => simulate(cfg)?,
        Mode::Bounds => bounds_rows(cfg, false)?,
        Mode::Sweep => bounds_rows(cfg, true)?,
    };
    if let Some(c) = result.column(STATUS) {
        result.failed = result.rows.iter().filter(|r| r[c] != Value::Text(OK.into())).count();
    }
    Ok(result)
}

fn finish(mode: Mode, header: Vec<&'static str>, per_cell: Vec<Vec<Vec<Value>>>) -> SweepResult {
    SweepResult {
        mode,
        header,
        rows: per_cell.into_iter().flatten().collect(),
        failed: 0,
        slopes: Vec::new(),
        tight: None,
    }
}

/// Fits `metric` per group against `n`, averaging over seeds. Groups with
/// fewer than four sizes holding a positive mean are skipped.
fn slopes_by_group(res: &SweepResult, group_col: &str, metric: &str) -> Vec<SlopeFit> {
    let (Some(g), Some(nc), Some(st)) = (res.column(group_col), res.column("n"), res.column(STATUS)) else {
        return Vec::new();
    };
    let vals = res.floats(metric);
    let mut groups: Vec<String> = Vec::new();
    for r in &res.rows {
        let k = r[g].to_string();
        if !groups.contains(&k) {
            groups.push(k);
        }
    }
    let mut out = Vec::new();
    for k in groups {
        let mut per_n: Vec<(f64, f64, usize)> = Vec::new();
        for (r, v) in res.rows.iter().zip(&vals) {
            if r[g].to_string() != k || r[st] != Value::Text(OK.into()) {
                continue;
            }
            let (Value::Int(n), Some(v)) = (&r[nc], v) else { continue };
            let n = *n as f64;
            match per_n.iter_mut().find(|p| p.0 == n) {
                Some(p) => {
                    p.1 += v;
                    p.2 += 1;
                }
                None => per_n.push((n, *v, 1)),
            }
        }
        let pts: Vec<(f64, f64)> = per_n
            .iter()
            .map(|&(n, s, c)| (n, s / c as f64))
            .filter(|p| p.1 > 0.0)
            .collect();
        if let Ok((slope, stderr)) = fit_slope(&pts) {
            out.push(SlopeFit {
                group: k,
                metric: metric.to_string(),
                slope,
                stderr,
                points: pts.len(),
            });
        }
    }
    out
}

fn deploy(cfg: &ExperimentConfig) -> SweepResult {
    let header = vec!["n", "seed", "lambda", "side", "realized", "expected", "ratio", STATUS];
    let w = header.len();
    let rows = cells(cfg)
        .par_iter()
        .map(|&(n, seed)| {
            let lambda = cfg.lambda.eval(n as f64);
            let key = vec![n.into(), seed.into(), lambda.into()];
            vec![match sample_deployment(n, lambda, seed) {
                Ok(d) => vec![
                    n.into(),
                    seed.into(),
                    lambda.into(),
                    d.side().into(),
                    d.len().into(),
                    n.into(),
                    (d.len() as f64 / n as f64).into(),
                    OK.into(),
                ],
                Err(e) => failed_row(key, w, &e),
            }]
        })
        .collect();
    finish(Mode::Deploy, header, rows)
}

fn percolate(cfg: &ExperimentConfig) -> SweepResult {
    let header = vec![
        "n",
        "seed",
        "lambda",
        "gamma",
        "r",
        "realized",
        "largest_cluster",
        "largest_fraction",
        "log_n",
        "num_clusters",
        "giant",
        "exterior",
        "max_exterior_distance",
        "scaled_max",
        "tail_rate",
        STATUS,
    ];
    let w = header.len();
    let jobs: Vec<(usize, f64, u64)> = cfg
        .ns
        .iter()
        .flat_map(|&n| cfg.gammas.iter().flat_map(move |&g| cfg.seeds.iter().map(move |&s| (n, g, s))))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(n, gamma, seed)| {
            let lambda = cfg.lambda.eval(n as f64);
            let r = radius_for_gamma(lambda, gamma);
            let key = vec![n.into(), seed.into(), lambda.into(), gamma.into(), r.into()];
            let one = || -> Result<Vec<Value>> {
                let d = sample_deployment(n, lambda, seed)?;
                let cl = cluster_with(&d, r, cfg.giant_fraction)?;
                let ext = match cl.giant_id {
                    Some(_) => Some(exterior_stats(&d, &cl)?),
                    None => None,
                };
                let largest = cl.largest();
                Ok(vec![
                    n.into(),
                    seed.into(),
                    lambda.into(),
                    gamma.into(),
                    r.into(),
                    d.len().into(),
                    largest.into(),
                    (largest as f64 / d.len().max(1) as f64).into(),
                    d.ln_n().into(),
                    cl.num_clusters().into(),
                    cl.giant_id.is_some().into(),
                    ext.as_ref().map(|e| e.distances.len()).into(),
                    ext.as_ref().map(|e| e.max_distance).into(),
                    ext.as_ref().map(|e| e.scaled_max).into(),
                    ext.as_ref().and_then(|e| tail_rate(e, lambda, r)).into(),
                    OK.into(),
                ])
            };
            vec![one().unwrap_or_else(|e| failed_row(key, w, &e))]
        })
        .collect();
    let mut res = finish(Mode::Percolate, header, rows);
    res.slopes = slopes_by_group(&res, "gamma", "largest_fraction");
    res.slopes.extend(slopes_by_group(&res, "gamma", "scaled_max"));
    res
}

fn ar_kind(s: Scheme) -> ArKind {
    if s.is_parallel() {
        ArKind::Parallel
    } else {
        ArKind::Ordinary
    }
}

fn highways_for(cfg: &ExperimentConfig, d: &crate::spatial::Deployment) -> Result<Option<HighwaySystem>> {
    if cfg.schemes.iter().any(|s| s.uses_highways()) {
        let (c, kappa) = highway_params(cfg)?;
        Ok(Some(build_highways(d, c, kappa)?))
    } else {
        Ok(None)
    }
}

fn backbone(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let header = vec![
        "n",
        "seed",
        "scheme",
        "lambda",
        "ar_cells_per_side",
        "ar_min_count",
        "ar_max_count",
        "ar_stations",
        "hw_m",
        "hw_horizontal",
        "hw_vertical",
        "hw_min_crossings",
        "eta_est",
        "hw_complete",
        STATUS,
    ];
    let w = header.len();
    let rows = cells(cfg)
        .par_iter()
        .map(|&(n, seed)| {
            let lambda = cfg.lambda.eval(n as f64);
            let key = |s: Scheme| vec![n.into(), seed.into(), s.name().into(), lambda.into()];
            let d = match sample_deployment(n, lambda, seed) {
                Ok(d) => d,
                Err(e) => return cfg.schemes.iter().map(|&s| failed_row(key(s), w, &e)).collect(),
            };
            let hs = highways_for(cfg, &d);
            cfg.schemes
                .iter()
                .map(|&s| {
                    let one = || -> Result<Vec<Value>> {
                        let ar = build_arterial(&d, ar_kind(s))?;
                        let counts = ar.counts();
                        let stations: usize = (0..ar.lattice().rows())
                            .flat_map(|r| (0..ar.lattice().cols()).map(move |c| (r, c)))
                            .map(|(r, c)| ar.stations(r, c).len())
                            .sum();
                        let mut row = key(s);
                        row.extend([
                            ar.lattice().rows().into(),
                            counts.iter().copied().min().unwrap_or(0).into(),
                            counts.iter().copied().max().unwrap_or(0).into(),
                            stations.into(),
                        ]);
                        if s.uses_highways() {
                            let hs = hs.as_ref().map_err(|e| Error::construction(e.to_string()))?;
                            let hs = hs.as_ref().ok_or_else(|| Error::state("highways were not built"))?;
                            row.extend([
                                hs.m.into(),
                                hs.horizontal.len().into(),
                                hs.vertical.len().into(),
                                hs.slab_counts().into_iter().min().unwrap_or(0).into(),
                                hs.eta_est.into(),
                                hs.complete.into(),
                            ]);
                        } else {
                            row.extend(std::iter::repeat_n(Value::Empty, 6));
                        }
                        row.push(OK.into());
                        Ok(row)
                    };
                    one().unwrap_or_else(|e| failed_row(key(s), w, &e))
                })
                .collect()
        })
        .collect();
    Ok(finish(Mode::Backbone, header, rows))
}

fn route(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let header = vec![
        "n",
        "seed",
        "scheme",
        "lambda",
        "n_s",
        "n_d",
        "hops_mean",
        "hops_max",
        "max_link_load",
        "max_ar_station_load",
        "max_hw_station_load",
        STATUS,
    ];
    let w = header.len();
    let rows = cells(cfg)
        .par_iter()
        .map(|&(n, seed)| {
            let lambda = cfg.lambda.eval(n as f64);
            let (n_s, n_d) = cfg.counts(n);
            let key = |s: Scheme| vec![n.into(), seed.into(), s.name().into(), lambda.into(), n_s.into(), n_d.into()];
            let setup = || -> Result<_> {
                let d = sample_deployment(n, lambda, seed)?;
                let sessions = generate_sessions(&d, n_s, n_d, seed)?;
                Ok((d, sessions))
            };
            let (d, sessions) = match setup() {
                Ok(x) => x,
                Err(e) => return cfg.schemes.iter().map(|&s| failed_row(key(s), w, &e)).collect(),
            };
            let hs = highways_for(cfg, &d);
            cfg.schemes
                .iter()
                .map(|&s| {
                    let one = || -> Result<Vec<Value>> {
                        let ar = build_arterial(&d, ar_kind(s))?;
                        let hs = match &hs {
                            Ok(h) => h.as_ref(),
                            Err(e) => return Err(Error::construction(e.to_string())),
                        };
                        let router = Router::new(&d, &ar, if s.uses_highways() { hs } else { None })?;
                        let trees: Vec<RoutingTree> = sessions
                            .iter()
                            .map(|m| router.route(m, s, cfg.skeleton))
                            .collect::<Result<_>>()?;
                        let (_, _, loads) = load_map(&trees);
                        let hops: Vec<usize> = trees.iter().map(|t| t.hops.len()).collect();
                        let mut row = key(s);
                        row.extend([
                            (hops.iter().sum::<usize>() as f64 / hops.len() as f64).into(),
                            hops.iter().copied().max().unwrap_or(0).into(),
                            loads.max_link_load().into(),
                            loads.max_station_load(Layer::Arterial).into(),
                            loads.max_station_load(Layer::Highway).into(),
                            OK.into(),
                        ]);
                        Ok(row)
                    };
                    one().unwrap_or_else(|e| failed_row(key(s), w, &e))
                })
                .collect()
        })
        .collect();
    let mut res = finish(Mode::Route, header, rows);
    res.slopes = slopes_by_group(&res, "scheme", "max_ar_station_load");
    Ok(res)
}

fn simulate(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let header = vec![
        "n",
        "seed",
        "scheme",
        "lambda",
        "n_s",
        "n_d",
        "alpha",
        "throughput",
        "predicted",
        "ratio",
        "bottleneck",
        "max_ar_station_load",
        "max_hw_station_load",
        STATUS,
    ];
    let w = header.len();
    let params = channel(cfg)?;
    let rows = cells(cfg)
        .par_iter()
        .map(|&(n, seed)| {
            let nf = n as f64;
            let lambda = cfg.lambda.eval(nf);
            let (n_s, n_d) = cfg.counts(n);
            let key = |s: Scheme| {
                vec![
                    n.into(),
                    seed.into(),
                    s.name().into(),
                    lambda.into(),
                    n_s.into(),
                    n_d.into(),
                    cfg.alpha.into(),
                ]
            };
            let setup = || -> Result<_> {
                let d = sample_deployment(n, lambda, seed)?;
                let sessions = generate_sessions(&d, n_s, n_d, seed)?;
                Ok((d, sessions))
            };
            let (d, sessions) = match setup() {
                Ok(x) => x,
                Err(e) => return cfg.schemes.iter().map(|&s| failed_row(key(s), w, &e)).collect(),
            };
            let hs = highways_for(cfg, &d);
            let mut built: Vec<(ArKind, Result<_>)> = Vec::new();
            cfg.schemes
                .iter()
                .map(|&s| {
                    let kind = ar_kind(s);
                    if !built.iter().any(|b| b.0 == kind) {
                        let b = build_arterial(&d, kind).and_then(|ar| {
                            let acc = build_access(&d, &ar, &params)?;
                            Ok((ar, acc))
                        });
                        built.push((kind, b));
                    }
                    let one = || -> Result<Vec<Value>> {
                        let (ar, acc) = match &built.iter().find(|b| b.0 == kind).expect("built above").1 {
                            Ok(x) => x,
                            Err(e) => return Err(Error::construction(e.to_string())),
                        };
                        let hs = match &hs {
                            Ok(h) => h.as_ref(),
                            Err(e) => return Err(Error::construction(e.to_string())),
                        };
                        let out = evaluate_scheme(&d, ar, hs, acc, &params, &sessions, s, cfg.skeleton)?;
                        let inputs = Inputs::new(lambda, nf, n_s as f64, n_d as f64, cfg.alpha)?.with_polylog(cfg.polylog)?;
                        let predicted = bounds::scheme_throughput(&inputs, s);
                        let t = out.report.throughput;
                        let mut row = key(s);
                        row.extend([
                            t.into(),
                            predicted.into(),
                            (t / predicted).into(),
                            out.report.bottleneck.name().into(),
                            out.max_station_load(Layer::Arterial).into(),
                            out.max_station_load(Layer::Highway).into(),
                            OK.into(),
                        ]);
                        Ok(row)
                    };
                    one().unwrap_or_else(|e| failed_row(key(s), w, &e))
                })
                .collect()
        })
        .collect();
    let mut res = finish(Mode::Simulate, header, rows);
    res.slopes = slopes_by_group(&res, "scheme", "throughput");
    Ok(res)
}

fn bounds_rows(cfg: &ExperimentConfig, sweep: bool) -> Result<SweepResult> {
    let mut header = vec![
        "lambda",
        "n",
        "n_s",
        "n_d",
        "alpha",
        "upper",
        "lc_star",
        "lower",
        "best_scheme",
        "ratio",
        "regime_upper",
        "regime_lower",
    ];
    if sweep {
        header.extend(["reference", "upper_over_reference", "prior"]);
    }
    let reports: Vec<bounds::CapacityReport> = cfg
        .ns
        .par_iter()
        .map(|&n| {
            let nf = n as f64;
            let i = Inputs::new(cfg.lambda.eval(nf), nf, cfg.n_s.eval(nf), cfg.n_d.eval(nf), cfg.alpha)?
                .with_polylog(cfg.polylog)?;
            bounds::tightness(&i, cfg.grid)
        })
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<Value>> = reports
        .iter()
        .map(|r| {
            let i = r.inputs;
            let mut row: Vec<Value> = vec![
                i.lambda.into(),
                (i.n as usize).into(),
                i.n_s.into(),
                i.n_d.into(),
                i.alpha.into(),
                r.upper.into(),
                r.lc_star.into(),
                r.lower.into(),
                r.best_scheme.name().into(),
                r.ratio.into(),
                r.regime_upper.clone().into(),
                r.regime_lower.clone().into(),
            ];
            if sweep {
                let full = i.n_s == i.n;
                let (reference, prior) = match cfg.lambda {
                    LambdaRule::Dense if full => (
                        Some(bounds::rdn_reference(i.n, i.n_d)),
                        Some(bounds::prior_bounds(i.n, i.n_d, bounds::Family::Rdn, i.alpha)),
                    ),
                    LambdaRule::Extended if full => (
                        Some(bounds::ren_reference(i.n, i.n_d, i.alpha)),
                        Some(bounds::prior_bounds(i.n, i.n_d, bounds::Family::Ren, i.alpha)),
                    ),
                    _ => (None, None),
                };
                row.push(reference.into());
                row.push(reference.map(|x| r.upper / x).into());
                row.push(prior.into());
            }
            row
        })
        .collect();
    let mode = if sweep { Mode::Sweep } else { Mode::Bounds };
    let mut res = finish(mode, header, vec![rows]);
    if sweep {
        let (_, tight) = bounds::tightness_trend(&reports, cfg.slack, cfg.slope_tol)?;
        let xs: Vec<f64> = reports.iter().map(|r| r.inputs.n.ln()).collect();
        let ys: Vec<f64> = reports.iter().map(|r| r.ratio.ln()).collect();
        let (slope, stderr) = regress(&xs, &ys)?;
        res.slopes.push(SlopeFit {
            group: "all".into(),
            metric: "ratio".into(),
            slope,
            stderr,
            points: reports.len(),
        });
        res.tight = Some(tight);
    }
    Ok(res)
}
