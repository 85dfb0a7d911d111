//! Label-free hyperparameter selection: exhaustive grid search scored by
//! silhouette, data-adaptive default grids, and the oracle-k convention for
//! k-means and BIRCH.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{
    birch, dbscan, hdbscan, hdbscan_knn, kmeans, AlgorithmTag, BirchConfig, DbscanConfig, HdbscanConfig, KMeansConfig,
    Partition,
};
use crate::error::{Error, Result};
use crate::metrics::silhouette;
use crate::vector::{common_dim, distance_matrix};

/// A fully specified clustering run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case")]
pub enum AlgoConfig {
    Kmeans(KMeansConfig),
    Dbscan(DbscanConfig),
    Hdbscan(HdbscanConfig),
    HdbscanKnn(HdbscanConfig),
    Birch(BirchConfig),
}

impl AlgoConfig {
    pub fn tag(&self) -> AlgorithmTag {
        match self {
            AlgoConfig::Kmeans(_) => AlgorithmTag::Kmeans,
            AlgoConfig::Dbscan(_) => AlgorithmTag::Dbscan,
            AlgoConfig::Hdbscan(_) => AlgorithmTag::Hdbscan,
            AlgoConfig::HdbscanKnn(_) => AlgorithmTag::HdbscanKnn,
            AlgoConfig::Birch(_) => AlgorithmTag::Birch,
        }
    }

    pub fn run<P: AsRef<[f64]> + Sync>(&self, data: &[P]) -> Result<Partition> {
        match self {
            AlgoConfig::Kmeans(c) => kmeans(data, c),
            AlgoConfig::Dbscan(c) => dbscan(data, c),
            AlgoConfig::Hdbscan(c) => hdbscan(data, c),
            AlgoConfig::HdbscanKnn(c) => hdbscan_knn(data, c),
            AlgoConfig::Birch(c) => birch(data, c),
        }
    }

    /// Sets one named parameter. Integer parameters reject fractional values.
    pub fn set(&mut self, param: &str, value: f64) -> Result<()> {
        let tag = self.tag();
        let bad = || Error::Config(format!("illegal value {value} for {param} on {tag:?}"));
        let int = |min: usize| -> Result<usize> {
            if value.is_finite() && value.fract() == 0.0 && value >= min as f64 {
                Ok(value as usize)
            } else {
                Err(bad())
            }
        };
        let positive = value.is_finite() && value > 0.0;
        match (self, param) {
            (AlgoConfig::Kmeans(c), "k") => c.k = int(1)?,
            (AlgoConfig::Kmeans(c), "max_iter") => c.max_iter = int(1)?,
            (AlgoConfig::Kmeans(c), "seed") => c.seed = int(0)? as u64,
            (AlgoConfig::Dbscan(c), "eps") if positive => c.eps = value,
            (AlgoConfig::Dbscan(c), "min_pts") => c.min_pts = int(1)?,
            (AlgoConfig::Hdbscan(c) | AlgoConfig::HdbscanKnn(c), "min_cluster_size") => c.min_cluster_size = int(2)?,
            (AlgoConfig::Hdbscan(c) | AlgoConfig::HdbscanKnn(c), "min_samples") => c.min_samples = int(1)?,
            (AlgoConfig::Hdbscan(c) | AlgoConfig::HdbscanKnn(c), "knn_k") => c.knn_k = int(1)?,
            (AlgoConfig::Birch(c), "threshold") if value.is_finite() && value >= 0.0 => c.threshold = value,
            (AlgoConfig::Birch(c), "branching") => c.branching = int(2)?,
            (AlgoConfig::Birch(c), "global_k") => c.global_k = Some(int(1)?),
            _ => return Err(bad()),
        }
        Ok(())
    }
}

/// One named list of candidate values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(param: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            param: param.into(),
            values,
        }
    }
}

/// A base configuration plus the axes to sweep. Grid points are enumerated
/// with the first axis outermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub base: AlgoConfig,
    pub axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(base: AlgoConfig) -> Self {
        Self { base, axes: Vec::new() }
    }

    pub fn axis(mut self, param: impl Into<String>, values: Vec<f64>) -> Self {
        self.axes.push(Axis::new(param, values));
        self
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        for axis in &self.axes {
            if axis.values.is_empty() {
                return Err(Error::Config(format!("axis {} is empty", axis.param)));
            }
            let mut probe = self.base;
            for &v in &axis.values {
                probe.set(&axis.param, v)?;
            }
        }
        Ok(())
    }

    /// Every grid point in enumeration order.
    pub fn configs(&self) -> Result<Vec<AlgoConfig>> {
        self.validate()?;
        let mut out = Vec::with_capacity(self.len());
        let mut idx = vec![0usize; self.axes.len()];
        loop {
            let mut cfg = self.base;
            for (axis, &i) in self.axes.iter().zip(&idx) {
                cfg.set(&axis.param, axis.values[i])?;
            }
            out.push(cfg);
            // Odometer increment, last axis fastest.
            let mut pos = self.axes.len();
            loop {
                if pos == 0 {
                    return Ok(out);
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < self.axes[pos].values.len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub config: AlgoConfig,
    pub score: Option<f64>,
    pub pc: usize,
    pub noise_pct: f64,
    /// Set when the run itself failed; the score is then null.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best_config: AlgoConfig,
    pub best_score: f64,
    pub trials: Vec<Trial>,
}

impl TuneResult {
    /// Writes the trial log as JSON lines.
    pub fn write_trials<W: Write>(&self, mut w: W) -> Result<()> {
        for t in &self.trials {
            serde_json::to_writer(&mut w, t)?;
            w.write_all(b"\n").map_err(|e| Error::io("<trial log>", e))?;
        }
        Ok(())
    }
}

fn run_trial<P: AsRef<[f64]> + Sync>(data: &[P], config: AlgoConfig) -> Trial {
    let n = data.len().max(1) as f64;
    match config.run(data).and_then(|p| Ok((silhouette(data, &p)?, p))) {
        Ok((score, p)) => Trial {
            config,
            score,
            pc: p.n_clusters(),
            noise_pct: 100.0 * p.noise_count() as f64 / n,
            error: None,
        },
        Err(e) => Trial {
            config,
            score: None,
            pc: 0,
            noise_pct: if matches!(e, Error::AllNoise) { 100.0 } else { 0.0 },
            error: Some(e.to_string()),
        },
    }
}

/// Evaluates every grid point and keeps the first one with the highest
/// silhouette. Null scores never win.
pub fn grid_search<P: AsRef<[f64]> + Sync>(data: &[P], spec: &GridSpec) -> Result<TuneResult> {
    common_dim(data)?;
    let configs = spec.configs()?;
    let trials: Vec<Trial> = configs.into_par_iter().map(|c| run_trial(data, c)).collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, t) in trials.iter().enumerate() {
        if let Some(s) = t.score {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
    }
    let (i, best_score) = best.ok_or(Error::ExhaustedGrid)?;
    Ok(TuneResult {
        best_config: trials[i].config,
        best_score,
        trials,
    })
}

/// Linear-interpolation percentile of sorted values, `q` in [0, 100].
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Deciles 10..=90, positive and de-duplicated.
fn decile_axis(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = (1..=9).map(|i| percentile(&values, 10.0 * i as f64)).collect();
    out.retain(|&v| v > 0.0);
    out.dedup();
    out
}

/// Number of random pairs drawn for the BIRCH threshold axis.
pub const BIRCH_PAIR_SAMPLES: usize = 1000;

/// Data-adaptive grid for `algorithm`. Distance-based axes are anchored on
/// percentiles so one grid works at any embedding scale.
pub fn default_grid<P: AsRef<[f64]>>(algorithm: AlgorithmTag, data: &[P], seed: u64) -> Result<GridSpec> {
    let n = data.len();
    if n < 10 {
        return Err(Error::InsufficientData(format!(
            "default grids need at least 10 points, got {n}"
        )));
    }
    common_dim(data)?;
    let as_f64 = |v: &[usize]| v.iter().map(|&x| x as f64).collect::<Vec<_>>();
    let spec = match algorithm {
        AlgorithmTag::Dbscan => {
            let d = distance_matrix(data);
            let kth: Vec<f64> = (0..n)
                .map(|i| {
                    let mut row: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| d[i * n + j]).collect();
                    row.sort_by(f64::total_cmp);
                    row[3]
                })
                .collect();
            let eps = decile_axis(kth);
            if eps.is_empty() {
                return Err(Error::InsufficientData("all 4-NN distances are zero".into()));
            }
            GridSpec::new(AlgoConfig::Dbscan(DbscanConfig { eps: eps[0], min_pts: 3 }))
                .axis("eps", eps)
                .axis("min_pts", as_f64(&[3, 5, 10, 15]))
        }
        AlgorithmTag::Hdbscan | AlgorithmTag::HdbscanKnn => {
            let mcs: Vec<usize> = [5, 10, 15, 25, 50]
                .into_iter()
                .filter(|&m| (2..=n / 2).contains(&m))
                .collect();
            let base = HdbscanConfig::new(mcs[0], 1);
            let base = if algorithm == AlgorithmTag::Hdbscan {
                AlgoConfig::Hdbscan(base)
            } else {
                AlgoConfig::HdbscanKnn(base)
            };
            GridSpec::new(base)
                .axis("min_cluster_size", as_f64(&mcs))
                .axis("min_samples", as_f64(&[1, 5, 10]))
        }
        AlgorithmTag::Birch => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sample: Vec<f64> = (0..BIRCH_PAIR_SAMPLES)
                .map(|_| {
                    let i = rng.random_range(0..n);
                    let mut j = rng.random_range(0..n - 1);
                    if j >= i {
                        j += 1;
                    }
                    crate::vector::dist(data[i].as_ref(), data[j].as_ref())
                })
                .collect();
            let thresholds = decile_axis(sample);
            if thresholds.is_empty() {
                return Err(Error::InsufficientData("all sampled distances are zero".into()));
            }
            let base = BirchConfig {
                seed,
                ..BirchConfig::new(thresholds[0])
            };
            GridSpec::new(AlgoConfig::Birch(base)).axis("threshold", thresholds)
        }
        AlgorithmTag::Kmeans => {
            let ks: Vec<usize> = (2..=10.min(n / 2)).collect();
            GridSpec::new(AlgoConfig::Kmeans(KMeansConfig::new(2).with_seed(seed))).axis("k", as_f64(&ks))
        }
        other => {
            return Err(Error::Config(format!("no default grid for {other:?}")));
        }
    };
    Ok(spec)
}

/// Runs k-means or BIRCH with the ground-truth cluster count. BIRCH takes its
/// threshold from `tuned` or, failing that, from a default-grid search run
/// with the global step already fixed at `true_k`.
pub fn oracle_partition<P: AsRef<[f64]> + Sync>(
    data: &[P],
    algorithm: AlgorithmTag,
    true_k: usize,
    tuned: Option<&TuneResult>,
    seed: u64,
) -> Result<Partition> {
    if true_k == 0 || true_k > data.len() {
        return Err(Error::Config(format!(
            "true_k = {true_k} must lie in 1..={}",
            data.len()
        )));
    }
    match algorithm {
        AlgorithmTag::Kmeans => kmeans(data, &KMeansConfig::new(true_k).with_seed(seed)),
        AlgorithmTag::Birch => {
            let threshold = match tuned {
                Some(t) => match t.best_config {
                    AlgoConfig::Birch(c) => c.threshold,
                    other => {
                        return Err(Error::Config(format!(
                            "tuning result is for {:?}, not BIRCH",
                            other.tag()
                        )))
                    }
                },
                None => {
                    let mut spec = default_grid(AlgorithmTag::Birch, data, seed)?;
                    spec.base.set("global_k", true_k as f64)?;
                    match grid_search(data, &spec) {
                        Ok(t) => match t.best_config {
                            AlgoConfig::Birch(c) => c.threshold,
                            _ => unreachable!("BIRCH grid yields BIRCH configs"),
                        },
                        // k = 1 has no silhouette anywhere; any threshold works.
                        Err(Error::ExhaustedGrid) if true_k == 1 => 0.0,
                        Err(e) => return Err(e),
                    }
                }
            };
            let cfg = BirchConfig {
                seed,
                ..BirchConfig::new(threshold).with_global_k(true_k)
            };
            birch(data, &cfg)
        }
        other => Err(Error::Config(format!("oracle-k applies to k-means and BIRCH, not {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_blobs() -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        (0..40)
            .map(|i| {
                let c = if i < 20 { 0.0 } else { 10.0 };
                vec![c + rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)]
            })
            .collect()
    }

    #[test]
    fn configs_enumerate_first_axis_outermost() {
        let spec = GridSpec::new(AlgoConfig::Dbscan(DbscanConfig { eps: 1.0, min_pts: 1 }))
            .axis("eps", vec![0.5, 1.5])
            .axis("min_pts", vec![2.0, 3.0, 4.0]);
        let got: Vec<(f64, usize)> = spec
            .configs()
            .unwrap()
            .into_iter()
            .map(|c| match c {
                AlgoConfig::Dbscan(d) => (d.eps, d.min_pts),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(got, vec![(0.5, 2), (0.5, 3), (0.5, 4), (1.5, 2), (1.5, 3), (1.5, 4)]);
    }

    #[test]
    fn invalid_axes_rejected() {
        let base = AlgoConfig::Dbscan(DbscanConfig { eps: 1.0, min_pts: 1 });
        assert!(GridSpec::new(base).axis("eps", vec![]).validate().is_err());
        assert!(GridSpec::new(base).axis("eps", vec![-1.0]).validate().is_err());
        assert!(GridSpec::new(base).axis("min_pts", vec![2.5]).validate().is_err());
        assert!(GridSpec::new(base).axis("threshold", vec![1.0]).validate().is_err());
    }

    #[test]
    fn singleton_grid_returns_base() {
        let data = two_blobs();
        let base = AlgoConfig::Dbscan(DbscanConfig { eps: 2.0, min_pts: 3 });
        let r = grid_search(&data, &GridSpec::new(base)).unwrap();
        assert_eq!(r.best_config, base);
        assert_eq!(r.trials.len(), 1);
    }

    #[test]
    fn correct_eps_wins() {
        let data = two_blobs();
        let spec = GridSpec::new(AlgoConfig::Dbscan(DbscanConfig { eps: 1.0, min_pts: 3 }))
            .axis("eps", vec![0.01, 2.0, 50.0]);
        let r = grid_search(&data, &spec).unwrap();
        assert_eq!(r.best_config, AlgoConfig::Dbscan(DbscanConfig { eps: 2.0, min_pts: 3 }));
        assert_eq!(r.trials[0].score, None);
        assert_eq!(r.trials[2].score, None);
    }

    #[test]
    fn ties_keep_first() {
        let data = two_blobs();
        let spec = GridSpec::new(AlgoConfig::Dbscan(DbscanConfig { eps: 1.0, min_pts: 3 }))
            .axis("eps", vec![2.0, 3.0]);
        let r = grid_search(&data, &spec).unwrap();
        assert_eq!(r.trials[0].score, r.trials[1].score);
        assert_eq!(r.best_config, r.trials[0].config);
    }

    #[test]
    fn exhausted_grid() {
        let data = two_blobs();
        let spec = GridSpec::new(AlgoConfig::Dbscan(DbscanConfig { eps: 1.0, min_pts: 3 }))
            .axis("eps", vec![100.0, 200.0]);
        assert!(matches!(grid_search(&data, &spec), Err(Error::ExhaustedGrid)));
    }

    #[test]
    fn hdbscan_axis_truncated_for_small_n() {
        let data: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let spec = default_grid(AlgorithmTag::Hdbscan, &data, 0).unwrap();
        assert_eq!(spec.axes[0].values, vec![5.0, 10.0]);
        assert_eq!(spec.len(), 6);
    }

    #[test]
    fn default_grid_needs_ten_points() {
        let data: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64]).collect();
        assert!(default_grid(AlgorithmTag::Dbscan, &data, 0).is_err());
    }

    #[test]
    fn eps_axis_increasing_and_birch_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data: Vec<Vec<f64>> = (0..1000)
            .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
            .collect();
        let spec = default_grid(AlgorithmTag::Dbscan, &data, 0).unwrap();
        assert!(spec.axes[0].values.windows(2).all(|w| w[0] < w[1]));
        let a = default_grid(AlgorithmTag::Birch, &data, 5).unwrap();
        let b = default_grid(AlgorithmTag::Birch, &data, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oracle_k_one() {
        let data = two_blobs();
        for algo in [AlgorithmTag::Kmeans, AlgorithmTag::Birch] {
            let p = oracle_partition(&data, algo, 1, None, 0).unwrap();
            assert_eq!(p.n_clusters(), 1);
        }
    }

    #[test]
    fn trial_log_is_jsonl() {
        let data = two_blobs();
        let spec = GridSpec::new(AlgoConfig::Dbscan(DbscanConfig { eps: 1.0, min_pts: 3 }))
            .axis("eps", vec![2.0, 100.0]);
        let r = grid_search(&data, &spec).unwrap();
        let mut buf = Vec::new();
        r.write_trials(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let back: Trial = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(back, r.trials[1]);
    }
}
