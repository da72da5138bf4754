//! Post-campaign analysis.
//!
//! Turns a campaign ledger into summary ratios, a typing of the critical
//! scenarios (k-means over the normalized parameter space, cluster count
//! picked by silhouette unless forced), the variable correlation matrix,
//! and a rendered report bundle of CSV tables and charts.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::Verdict;
use crate::fuzzing::{Campaign, EvalRecord, INVALID_FITNESS};
use crate::plot;

/// Within-cluster normalized standard deviation below which a variable
/// counts as converged: the search pinned it down, so it is annotated as
/// a root cause of that violation type.
pub const CONVERGED_STD: f64 = 0.15;
/// Cluster-count search tries k in [2, min(8, points - 1)].
pub const MAX_AUTO_CLUSTERS: usize = 8;

const KMEANS_MAX_ITERS: usize = 100;

#[derive(Debug, Error)]
pub enum AnalyzerError {
    #[error("campaign has no evaluations")]
    EmptyCampaign,
    #[error("need at least {needed} critical scenarios, have {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("cluster count must be at least 1")]
    InvalidClusterCount,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
}

// ---------------------------------------------------------------------------
// Summary ratios
// ---------------------------------------------------------------------------

/// Campaign summary: verdict counts, violation-type count, and their
/// ratios against the total evaluation count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignMetrics {
    pub total: usize,
    pub critical: usize,
    pub invalid: usize,
    pub types: usize,
    /// critical / total.
    pub cr: f64,
    /// invalid / total.
    pub ir: f64,
    /// types / total.
    pub tr: f64,
}

fn critical_records(campaign: &Campaign) -> Vec<(usize, &EvalRecord)> {
    campaign
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.verdict == Verdict::ValidCritical)
        .collect()
}

/// Counts verdicts and types the critical set. A single critical scenario
/// is one type by itself; with none there are no types.
pub fn campaign_metrics(campaign: &Campaign) -> Result<CampaignMetrics, AnalyzerError> {
    let total = campaign.records.len();
    if total == 0 {
        return Err(AnalyzerError::EmptyCampaign);
    }
    let critical = campaign.critical_count();
    let invalid =
        campaign.records.iter().filter(|r| r.verdict == Verdict::Invalid).count();
    let types = if critical >= 2 {
        cluster_critical(campaign, None)?.len()
    } else {
        critical
    };
    let t = total as f64;
    Ok(CampaignMetrics {
        total,
        critical,
        invalid,
        types,
        cr: critical as f64 / t,
        ir: invalid as f64 / t,
        tr: types as f64 / t,
    })
}

// ---------------------------------------------------------------------------
// Critical-scenario typing
// ---------------------------------------------------------------------------

/// One violation type: a cluster of critical scenarios in parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationType {
    pub id: usize,
    /// Cluster center in normalized unit coordinates.
    pub centroid_unit: Vec<f64>,
    /// Cluster center in actual parameter values (member mean).
    pub centroid_params: Vec<f64>,
    /// Per-variable standard deviation of member unit coordinates.
    pub spread_unit: Vec<f64>,
    /// Ledger indices of the member records.
    pub members: Vec<usize>,
    /// Variables the cluster converged on — the root-cause annotation.
    pub converged: Vec<String>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans_pp_init(data: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![data[rng.gen_range(0..data.len())].clone()];
    while centroids.len() < k {
        let weights: Vec<f64> = data
            .iter()
            .map(|p| centroids.iter().map(|c| sq_dist(p, c)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = weights.iter().sum();
        let next = if total <= 0.0 {
            // All remaining mass sits on existing centroids; any point works.
            rng.gen_range(0..data.len())
        } else {
            let mut ticket = rng.gen::<f64>() * total;
            let mut chosen = data.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                ticket -= w;
                if ticket <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centroids.push(data[next].clone());
    }
    centroids
}

fn kmeans(data: &[Vec<f64>], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = data[0].len();
    let mut centroids = kmeans_pp_init(data, k, &mut rng);
    let mut assignment = vec![0usize; data.len()];
    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for (i, p) in data.iter().enumerate() {
            let nearest = (0..k)
                .min_by(|a, b| {
                    sq_dist(p, &centroids[*a]).partial_cmp(&sq_dist(p, &centroids[*b])).unwrap()
                })
                .unwrap();
            if assignment[i] != nearest {
                assignment[i] = nearest;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, a) in data.iter().zip(&assignment) {
            counts[*a] += 1;
            for (s, v) in sums[*a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Revive an empty cluster on the point farthest from its
                // current centroid (first such point: deterministic).
                let far = (0..data.len())
                    .max_by(|a, b| {
                        let da = sq_dist(&data[*a], &centroids[assignment[*a]]);
                        let db = sq_dist(&data[*b], &centroids[assignment[*b]]);
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                centroids[c] = data[far].clone();
                changed = true;
            } else {
                for (cv, s) in centroids[c].iter_mut().zip(&sums[c]) {
                    *cv = s / counts[c] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }
    assignment
}

/// Mean silhouette coefficient of a clustering; singleton clusters score
/// their members zero.
pub fn silhouette(data: &[Vec<f64>], assignment: &[usize], k: usize) -> f64 {
    let n = data.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0f64; k];
        let mut counts = vec![0usize; k];
        for j in 0..n {
            if i != j {
                sums[assignment[j]] += sq_dist(&data[i], &data[j]).sqrt();
                counts[assignment[j]] += 1;
            }
        }
        let own = assignment[i];
        if counts[own] == 0 {
            continue; // singleton: contributes 0
        }
        let a = sums[own] / counts[own] as f64;
        let b = (0..k)
            .filter(|c| *c != own && counts[*c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if b.is_finite() {
            let m = a.max(b);
            if m > 0.0 {
                total += (b - a) / m;
            }
        }
    }
    total / n as f64
}

/// Groups the campaign's critical scenarios into violation types by
/// k-means over their normalized coordinates. With `k` unset the count is
/// chosen by maximum silhouette; identical points collapse to one
/// degenerate cluster. Deterministic for a given campaign.
pub fn cluster_critical(
    campaign: &Campaign,
    k: Option<usize>,
) -> Result<Vec<ViolationType>, AnalyzerError> {
    if k == Some(0) {
        return Err(AnalyzerError::InvalidClusterCount);
    }
    let crit = critical_records(campaign);
    let m = crit.len();
    if m < 2 {
        return Err(AnalyzerError::TooFewPoints { needed: 2, got: m });
    }
    let data: Vec<Vec<f64>> = crit.iter().map(|(_, r)| r.unit.clone()).collect();

    let degenerate = data.iter().all(|p| p == &data[0]);
    let assignment = if degenerate {
        vec![0usize; m]
    } else {
        match k {
            Some(k) => kmeans(&data, k.min(m), campaign.seed),
            None => {
                let hi = MAX_AUTO_CLUSTERS.min(m - 1);
                if hi < 2 {
                    // Two points: one type each.
                    kmeans(&data, 2, campaign.seed)
                } else {
                    let mut best: Option<(f64, Vec<usize>)> = None;
                    for kk in 2..=hi {
                        let a = kmeans(&data, kk, campaign.seed);
                        let score = silhouette(&data, &a, kk);
                        if best.as_ref().map_or(true, |(b, _)| score > *b) {
                            best = Some((score, a));
                        }
                    }
                    best.unwrap().1
                }
            }
        }
    };

    let k_used = assignment.iter().max().unwrap() + 1;
    let dim = campaign.dimension;
    let mut types = Vec::new();
    for c in 0..k_used {
        let members: Vec<usize> = assignment
            .iter()
            .enumerate()
            .filter(|(_, a)| **a == c)
            .map(|(i, _)| crit[i].0)
            .collect();
        if members.is_empty() {
            continue;
        }
        let n = members.len() as f64;
        let mut centroid_unit = vec![0.0; dim];
        let mut centroid_params = vec![0.0; dim];
        for idx in &members {
            let r = &campaign.records[*idx];
            for d in 0..dim {
                centroid_unit[d] += r.unit[d] / n;
                centroid_params[d] += r.params[d] / n;
            }
        }
        let mut spread_unit = vec![0.0; dim];
        for idx in &members {
            let r = &campaign.records[*idx];
            for d in 0..dim {
                spread_unit[d] += (r.unit[d] - centroid_unit[d]).powi(2) / n;
            }
        }
        for s in spread_unit.iter_mut() {
            *s = s.sqrt();
        }
        let converged = campaign
            .variables
            .iter()
            .zip(&spread_unit)
            .filter(|(_, s)| **s < CONVERGED_STD)
            .map(|(v, _)| v.clone())
            .collect();
        types.push(ViolationType {
            id: types.len(),
            centroid_unit,
            centroid_params,
            spread_unit,
            members,
            converged,
        });
    }
    Ok(types)
}

// ---------------------------------------------------------------------------
// Variable correlation
// ---------------------------------------------------------------------------

/// Pearson correlations between variables over the critical scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub variables: Vec<String>,
    /// Row-major symmetric matrix with unit diagonal.
    pub values: Vec<Vec<f64>>,
    /// Variables with no spread across the critical set; their
    /// off-diagonal entries are zero by convention.
    pub zero_variance: Vec<String>,
}

/// Correlates the normalized coordinates of the critical scenarios.
pub fn variable_correlation(campaign: &Campaign) -> Result<CorrelationMatrix, AnalyzerError> {
    let crit = critical_records(campaign);
    let m = crit.len();
    if m < 3 {
        return Err(AnalyzerError::TooFewPoints { needed: 3, got: m });
    }
    let dim = campaign.dimension;
    let n = m as f64;
    let mut means = vec![0.0; dim];
    for (_, r) in &crit {
        for d in 0..dim {
            means[d] += r.unit[d] / n;
        }
    }
    let mut vars = vec![0.0; dim];
    for (_, r) in &crit {
        for d in 0..dim {
            vars[d] += (r.unit[d] - means[d]).powi(2) / n;
        }
    }
    let flat: Vec<bool> = vars.iter().map(|v| *v <= 1e-24).collect();

    let mut values = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        values[i][i] = 1.0;
        for j in 0..i {
            let c = if flat[i] || flat[j] {
                0.0
            } else {
                let mut cov = 0.0;
                for (_, r) in &crit {
                    cov += (r.unit[i] - means[i]) * (r.unit[j] - means[j]) / n;
                }
                cov / (vars[i] * vars[j]).sqrt()
            };
            values[i][j] = c;
            values[j][i] = c;
        }
    }
    let zero_variance = campaign
        .variables
        .iter()
        .zip(&flat)
        .filter(|(_, f)| **f)
        .map(|(v, _)| v.clone())
        .collect();
    Ok(CorrelationMatrix { variables: campaign.variables.clone(), values, zero_variance })
}

// ---------------------------------------------------------------------------
// Report bundle
// ---------------------------------------------------------------------------

/// Everything `report` produced: the written files plus any notes about
/// skipped artifacts.
#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub metrics: CampaignMetrics,
    pub types: Vec<ViolationType>,
    pub files: Vec<PathBuf>,
    pub notes: Vec<String>,
}

fn verdict_color(v: Verdict) -> [u8; 3] {
    match v {
        Verdict::Invalid => plot::GREY,
        Verdict::ValidUncritical => plot::BLUE,
        Verdict::ValidCritical => plot::RED,
    }
}

fn write_metrics_csv(path: &Path, m: &CampaignMetrics) -> Result<(), AnalyzerError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["metric", "value"])?;
    w.write_record(["total", &m.total.to_string()])?;
    w.write_record(["critical", &m.critical.to_string()])?;
    w.write_record(["invalid", &m.invalid.to_string()])?;
    w.write_record(["types", &m.types.to_string()])?;
    w.write_record(["cr", &format!("{}", m.cr)])?;
    w.write_record(["ir", &format!("{}", m.ir)])?;
    w.write_record(["tr", &format!("{}", m.tr)])?;
    w.flush()?;
    Ok(())
}

fn write_clusters_csv(
    path: &Path,
    campaign: &Campaign,
    types: &[ViolationType],
) -> Result<(), AnalyzerError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["cluster", "size", "variable", "centroid", "centroid_norm", "std_norm", "converged"])?;
    for t in types {
        for (d, var) in campaign.variables.iter().enumerate() {
            w.write_record([
                &t.id.to_string(),
                &t.members.len().to_string(),
                var,
                &format!("{}", t.centroid_params[d]),
                &format!("{}", t.centroid_unit[d]),
                &format!("{}", t.spread_unit[d]),
                &t.converged.contains(var).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_correlations_csv(path: &Path, c: &CorrelationMatrix) -> Result<(), AnalyzerError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["variable".to_string()];
    header.extend(c.variables.iter().cloned());
    w.write_record(&header)?;
    for (i, row) in c.values.iter().enumerate() {
        let mut rec = vec![c.variables[i].clone()];
        rec.extend(row.iter().map(|v| format!("{v}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Raw fitness with the invalid sentinel pulled up to just below the
/// worst valid score, so charts keep a readable scale.
fn display_fitness(records: &[EvalRecord]) -> Vec<f64> {
    let valid: Vec<f64> = records
        .iter()
        .map(|r| r.fitness)
        .filter(|f| *f > INVALID_FITNESS + 1.0)
        .collect();
    if valid.is_empty() {
        return records.iter().map(|r| r.fitness).collect();
    }
    let lo = valid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = valid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = lo - (hi - lo).max(1.0) * 0.1;
    records.iter().map(|r| r.fitness.max(floor)).collect()
}

/// Renders the full report into `out_dir` (created if missing): metric,
/// cluster, and correlation tables as CSV plus charts of the parameter
/// sweep, the violation types in 3D, the correlation heatmap, and the
/// fitness progress. Artifacts that need critical scenarios are skipped
/// (with a note) when there are none.
pub fn report(
    campaign: &Campaign,
    out_dir: &Path,
    k: Option<usize>,
) -> Result<ReportBundle, AnalyzerError> {
    if campaign.records.is_empty() {
        return Err(AnalyzerError::EmptyCampaign);
    }
    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    let mut notes = Vec::new();

    let crit = critical_records(campaign);
    let types = if crit.len() >= 2 {
        cluster_critical(campaign, k)?
    } else {
        Vec::new()
    };
    let mut metrics = campaign_metrics(campaign)?;
    if k.is_some() {
        // Honor the forced cluster count in the reported type ratio.
        metrics.types = types.len();
        metrics.tr = types.len() as f64 / metrics.total as f64;
    }

    let metrics_path = out_dir.join("metrics.csv");
    write_metrics_csv(&metrics_path, &metrics)?;
    files.push(metrics_path);

    // Parameter sweep: one panel per variable, every evaluation colored by
    // its verdict.
    let panels: Vec<plot::Panel> = campaign
        .variables
        .iter()
        .enumerate()
        .map(|(d, name)| plot::Panel {
            title: name.clone(),
            x_label: "evaluation".into(),
            y_label: "value".into(),
            points: campaign
                .records
                .iter()
                .map(|r| (r.index as f64, r.params[d], verdict_color(r.verdict)))
                .collect(),
        })
        .collect();
    let variables_png = out_dir.join("variables.png");
    let title = format!("{} parameter sweep", campaign.scenario);
    image::DynamicImage::ImageRgb8(plot::scatter_grid(&panels, &title)).save(&variables_png)?;
    files.push(variables_png);

    // Fitness progress: per-evaluation score and the running best.
    let shown = display_fitness(&campaign.records);
    let per_eval: Vec<(f64, f64)> =
        shown.iter().enumerate().map(|(i, f)| (i as f64, *f)).collect();
    let mut best = f64::NEG_INFINITY;
    let best_so_far: Vec<(f64, f64)> = shown
        .iter()
        .enumerate()
        .map(|(i, f)| {
            best = best.max(*f);
            (i as f64, best)
        })
        .collect();
    let progress_png = out_dir.join("progress.png");
    let series = vec![
        (per_eval, plot::LIGHT_GREY, "fitness".to_string()),
        (best_so_far, plot::GREEN, "best so far".to_string()),
    ];
    let title = format!("{} fitness progress", campaign.scenario);
    image::DynamicImage::ImageRgb8(plot::line_chart(&series, &title, "evaluation", "fitness"))
        .save(&progress_png)?;
    files.push(progress_png);

    if types.is_empty() {
        notes.push("no critical scenarios: cluster and correlation artifacts skipped".into());
        return Ok(ReportBundle { metrics, types, files, notes });
    }

    let clusters_path = out_dir.join("clusters.csv");
    write_clusters_csv(&clusters_path, campaign, &types)?;
    files.push(clusters_path);

    // Violation types in the space of the first three variables.
    let mut points = Vec::new();
    for t in &types {
        let color = plot::PALETTE[t.id % plot::PALETTE.len()];
        for idx in &t.members {
            let p = &campaign.records[*idx].params;
            let coord = |d: usize| p.get(d).copied().unwrap_or(0.0);
            points.push((coord(0), coord(1), coord(2), color));
        }
    }
    let axis = |d: usize| -> &str {
        campaign.variables.get(d).map(|s| s.as_str()).unwrap_or("-")
    };
    let legend: Vec<(String, [u8; 3])> = types
        .iter()
        .map(|t| {
            (format!("type {} ({})", t.id, t.members.len()),
             plot::PALETTE[t.id % plot::PALETTE.len()])
        })
        .collect();
    let clusters_png = out_dir.join("clusters3d.png");
    let title = format!("{} violation types", campaign.scenario);
    image::DynamicImage::ImageRgb8(plot::scatter_3d(
        &points,
        (axis(0), axis(1), axis(2)),
        &title,
        &legend,
    ))
    .save(&clusters_png)?;
    files.push(clusters_png);

    match variable_correlation(campaign) {
        Ok(corr) => {
            let corr_csv = out_dir.join("correlations.csv");
            write_correlations_csv(&corr_csv, &corr)?;
            files.push(corr_csv);
            let corr_png = out_dir.join("correlation.png");
            let title = format!("{} variable correlation", campaign.scenario);
            image::DynamicImage::ImageRgb8(plot::heatmap(&corr.values, &corr.variables, &title))
                .save(&corr_png)?;
            files.push(corr_png);
        }
        Err(AnalyzerError::TooFewPoints { needed, got }) => {
            notes.push(format!(
                "correlation skipped: needs {needed} critical scenarios, have {got}"
            ));
        }
        Err(e) => return Err(e),
    }

    Ok(ReportBundle { metrics, types, files, notes })
}
