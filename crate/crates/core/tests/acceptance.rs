//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.
//!
//! Expected values come from independent reference implementations written
//! here, never from the library under test.

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use docclust::cluster::{
    cf_merge, dbscan, hdbscan, hdbscan_knn, kmeans, kmeans_fit, mutual_reachability_mst, CfEntry,
    DbscanConfig, HdbscanConfig, KMeansConfig,
};
use docclust::consolidation::{adaptive_k, centroid_agglomerate, BootstrapConfig};
use docclust::fusion::{coral_align, GroupStats};
use docclust::metrics::{adjusted_rand, homogeneity_completeness, normalized_mi};
use docclust::multipage::{build_page_graph, PageGraphConfig};
use docclust::projection::{cls_pool, hybrid_pool, mean_pool, HybridConfig};
use docclust::synth::{generate_vectors, BlobSpec, Shift};
use docclust::tuning::{default_grid, grid_search, oracle_partition, AlgoConfig};
use docclust::{AlgorithmTag, DocVector, Label, Partition, Strategy, TokenEmbeddings, NOISE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    check: fn() -> Outcome,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

/// A few loose blobs plus uniform scatter; small integer grids add ties.
fn random_cloud(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    let centres: Vec<Vec<f64>> = (0..rng.random_range(1..=4))
        .map(|_| (0..d).map(|_| rng.random_range(-10.0..10.0)).collect())
        .collect();
    let lattice = rng.random_bool(0.2);
    (0..n)
        .map(|_| {
            let p: Vec<f64> = if rng.random_bool(0.15) {
                (0..d).map(|_| rng.random_range(-12.0..12.0)).collect()
            } else {
                let c = &centres[rng.random_range(0..centres.len())];
                gaussian(rng, d).iter().zip(c).map(|(z, m)| z + m).collect()
            };
            if lattice {
                p.iter().map(|x| x.round()).collect()
            } else {
                p
            }
        })
        .collect()
}

/// Cosine matrix of the worked example: pages 0-2, 1-3 and 2-4 are similar.
/// Pages 0 and 4 sit at 0.4, below both of their selected partners, and
/// every other pair is orthogonal so that the matrix stays positive definite.
fn golden_cosines() -> Vec<Vec<f64>> {
    let mut s = vec![vec![0.0; 5]; 5];
    for (i, row) in s.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for (i, j, c) in [(0, 2, 0.8), (1, 3, 0.6), (2, 4, 0.7), (0, 4, 0.4)] {
        s[i][j] = c;
        s[j][i] = c;
    }
    s
}

/// Rows of the Cholesky factor `L` of `g`, so that `L Lᵀ = g`: unit-norm
/// vectors whose pairwise cosines are the entries of `g`.
fn cholesky_rows(g: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = g.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][j] = (g[i][i] - s).sqrt();
            } else {
                l[i][j] = (g[i][j] - s) / l[j][j];
            }
        }
    }
    l
}

fn golden_graph() -> Outcome {
    let pages: Vec<DocVector> = cholesky_rows(&golden_cosines())
        .into_iter()
        .enumerate()
        .map(|(i, v)| DocVector::new(format!("p{i}"), v, Strategy::Raw))
        .collect();
    let cfg = PageGraphConfig {
        lambda_seq: 1.0,
        lambda_sim: 0.5,
        sem_k: 1,
        ..PageGraphConfig::default()
    };
    let g = build_page_graph(&pages, &cfg).map_err(|e| e.to_string())?;

    let a = [
        [1.0, 1.0, 0.4, 0.0, 0.0],
        [1.0, 1.0, 1.0, 0.3, 0.0],
        [0.4, 1.0, 1.0, 1.0, 0.35],
        [0.0, 0.3, 1.0, 1.0, 1.0],
        [0.0, 0.0, 0.35, 1.0, 1.0],
    ];
    let d = [2.4, 3.3, 3.75, 3.3, 2.35];
    let printed = [
        [0.416667, 0.355335, 0.133333, 0.0, 0.0],
        [0.355335, 0.303030, 0.284268, 0.090909, 0.0],
        [0.133333, 0.284268, 0.266667, 0.284268, 0.117901],
        [0.0, 0.090909, 0.284268, 0.303030, 0.359095],
        [0.0, 0.0, 0.117901, 0.359095, 0.425532],
    ];
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        ensure((g.degrees[i] - d[i]).abs() <= 1e-6, || {
            format!("degree {i}: {} vs {}", g.degrees[i], d[i])
        })?;
        for j in 0..5 {
            ensure((g.adjacency[i][j] - a[i][j]).abs() <= 1e-6, || {
                format!("A[{i}][{j}] = {} vs {}", g.adjacency[i][j], a[i][j])
            })?;
            let err = (g.normalized[i][j] - printed[i][j]).abs();
            worst = worst.max(err);
            ensure(err <= 1e-6, || {
                format!("Ã[{i}][{j}] = {} vs {}", g.normalized[i][j], printed[i][j])
            })?;
        }
    }
    Ok(format!("max |Ã - printed| = {worst:.1e}"))
}

/// Pair-counting ARI: each unordered pair is classified once.
fn ari_by_pairs(p: &[Label], t: &[Label]) -> f64 {
    let (mut ss, mut sd, mut ds, mut dd) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            match (p[i] == p[j], t[i] == t[j]) {
                (true, true) => ss += 1.0,
                (true, false) => sd += 1.0,
                (false, true) => ds += 1.0,
                (false, false) => dd += 1.0,
            }
        }
    }
    let denom = (ss + ds) * (ds + dd) + (ss + sd) * (sd + dd);
    if denom == 0.0 {
        1.0
    } else {
        2.0 * (ss * dd - ds * sd) / denom
    }
}

fn entropy_of(labels: &[Label]) -> f64 {
    let n = labels.len() as f64;
    let mut counts: HashMap<Label, f64> = HashMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1.0;
    }
    -counts.values().map(|&c| (c / n) * (c / n).ln()).sum::<f64>()
}

/// `H(a | b) = H(a, b) − H(b)`, with the joint entropy taken over label pairs.
fn conditional_entropy(a: &[Label], b: &[Label]) -> f64 {
    let n = a.len() as f64;
    let mut joint: HashMap<(Label, Label), f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1.0;
    }
    let h_joint = -joint.values().map(|&c| (c / n) * (c / n).ln()).sum::<f64>();
    h_joint - entropy_of(b)
}

fn nmi_by_entropy(p: &[Label], t: &[Label]) -> f64 {
    let (hp, ht) = (entropy_of(p), entropy_of(t));
    if hp == 0.0 && ht == 0.0 {
        return 1.0;
    }
    let mi = ht - conditional_entropy(t, p);
    (2.0 * mi / (hp + ht)).clamp(0.0, 1.0)
}

fn hs_cs_by_entropy(p: &[Label], t: &[Label]) -> (f64, f64) {
    let (hp, ht) = (entropy_of(p), entropy_of(t));
    let hs = if ht == 0.0 { 1.0 } else { 1.0 - conditional_entropy(t, p) / ht };
    let cs = if hp == 0.0 { 1.0 } else { 1.0 - conditional_entropy(p, t) / hp };
    (hs, cs)
}

fn metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let n = rng.random_range(2..=300);
        let kp = rng.random_range(1..=12);
        let kt = rng.random_range(1..=12);
        let noisy = rng.random_bool(0.5);
        let draw = |rng: &mut ChaCha8Rng, k: i64| -> Vec<Label> {
            (0..n)
                .map(|_| if noisy && rng.random_bool(0.1) { NOISE } else { rng.random_range(0..k) })
                .collect()
        };
        let p = draw(&mut rng, kp);
        // Every fourth case correlates the two labelings.
        let t = if case % 4 == 0 {
            p.iter().map(|&l| if rng.random_bool(0.8) { l } else { rng.random_range(0..kt) }).collect()
        } else {
            draw(&mut rng, kt)
        };
        let err = |s| move |e: docclust::Error| format!("case {case} {s}: {e}");
        let got = [
            adjusted_rand(&p, &t).map_err(err("ARI"))?,
            normalized_mi(&p, &t).map_err(err("NMI"))?,
            homogeneity_completeness(&p, &t).map_err(err("HS/CS"))?.0,
            homogeneity_completeness(&p, &t).map_err(err("HS/CS"))?.1,
        ];
        let (hs, cs) = hs_cs_by_entropy(&p, &t);
        let want = [ari_by_pairs(&p, &t), nmi_by_entropy(&p, &t), hs, cs];
        for (k, (g, w)) in got.iter().zip(&want).enumerate() {
            let diff = (g - w).abs();
            worst = worst.max(diff);
            ensure(diff <= 1e-9, || {
                format!("case {case} (n = {n}) metric {k}: {g} vs oracle {w}")
            })?;
        }
    }
    Ok(format!("200 label pairs, max deviation {worst:.1e}"))
}

/// Direct reading of the DBSCAN definition: core components by union-find,
/// numbered by lowest core index; borders take the component of their
/// lowest-indexed core neighbour.
fn dbscan_reference(x: &[Vec<f64>], eps: f64, min_pts: usize) -> Vec<Label> {
    let n = x.len();
    let near = |i: usize, j: usize| dist(&x[i], &x[j]) <= eps;
    let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_pts).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if core[i] && core[j] && near(i, j) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut ids: HashMap<usize, Label> = HashMap::new();
    let mut labels = vec![NOISE; n];
    for i in (0..n).filter(|&i| core[i]) {
        let root = find(&mut parent, i);
        let next = ids.len() as Label;
        labels[i] = *ids.entry(root).or_insert(next);
    }
    for i in (0..n).filter(|&i| !core[i]) {
        if let Some(c) = (0..n).find(|&j| core[j] && near(i, j)) {
            labels[i] = labels[c];
        }
    }
    labels
}

/// Equal up to a bijective renaming of clusters, noise fixed.
fn same_up_to_renaming(a: &[Label], b: &[Label]) -> bool {
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    a.len() == b.len()
        && a.iter().zip(b).all(|(&x, &y)| {
            if x == NOISE || y == NOISE {
                return x == y;
            }
            *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x
        })
}

fn dbscan_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut clusters_seen = 0;
    for case in 0..100 {
        let n = rng.random_range(1..=200);
        let d = rng.random_range(1..=6);
        let x = random_cloud(&mut rng, n, d);
        let eps = rng.random_range(0.3..4.0);
        let min_pts = rng.random_range(1..=10);
        let got = dbscan(&x, &DbscanConfig { eps, min_pts }).map_err(|e| format!("case {case}: {e}"))?;
        let want = dbscan_reference(&x, eps, min_pts);
        clusters_seen += got.n_clusters();
        ensure(same_up_to_renaming(got.labels(), &want), || {
            format!("case {case}: n = {n}, eps = {eps}, min_pts = {min_pts} differs from reference")
        })?;
    }
    Ok(format!("100 instances agree, {clusters_seen} clusters in total"))
}

/// Kruskal over every pair of the mutual-reachability graph.
fn brute_force_mst_weight(x: &[Vec<f64>], min_samples: usize) -> f64 {
    let n = x.len();
    let core: Vec<f64> = (0..n)
        .map(|i| {
            let mut d: Vec<f64> = x.iter().map(|y| dist(&x[i], y)).collect();
            d.sort_by(f64::total_cmp);
            d[min_samples - 1]
        })
        .collect();
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((dist(&x[i], &x[j]).max(core[i]).max(core[j]), i, j));
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut comp: Vec<usize> = (0..n).collect();
    let mut total = 0.0;
    for (w, i, j) in edges {
        let (ci, cj) = (comp[i], comp[j]);
        if ci != cj {
            total += w;
            for c in comp.iter_mut() {
                if *c == cj {
                    *c = ci;
                }
            }
        }
    }
    total
}

fn hdbscan_mst() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let n = rng.random_range(2..=100);
        let d = rng.random_range(1..=5);
        let x = random_cloud(&mut rng, n, d);
        let min_samples = rng.random_range(1..=n.min(10));
        let mst = mutual_reachability_mst(&x, min_samples).map_err(|e| format!("case {case}: {e}"))?;
        ensure(mst.len() == n - 1, || format!("case {case}: {} edges for {n} points", mst.len()))?;
        let got: f64 = mst.iter().map(|e| e.weight).sum();
        let want = brute_force_mst_weight(&x, min_samples);
        let diff = (got - want).abs();
        worst = worst.max(diff);
        ensure(diff <= 1e-9, || format!("case {case}: MST weight {got} vs brute force {want}"))?;
    }
    Ok(format!("50 instances, max deviation {worst:.1e}"))
}

fn hdbscan_knn_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut qualifying = 0;
    let mut reassigned = 0;
    for case in 0..100 {
        let n = rng.random_range(10..=150);
        let d = rng.random_range(1..=6);
        let x = random_cloud(&mut rng, n, d);
        let cfg = HdbscanConfig {
            knn_k: rng.random_range(1..=7),
            ..HdbscanConfig::new(rng.random_range(2..=10), rng.random_range(1..=8))
        };
        let base = hdbscan(&x, &cfg).map_err(|e| format!("case {case}: {e}"))?;
        if base.n_clusters() == 0 {
            continue;
        }
        qualifying += 1;
        reassigned += base.noise_count();
        let hybrid = hdbscan_knn(&x, &cfg).map_err(|e| format!("case {case}: {e}"))?;
        ensure(hybrid.noise_count() == 0, || {
            format!("case {case}: {} noise points remain", hybrid.noise_count())
        })?;
        for (i, (&b, &h)) in base.labels().iter().zip(hybrid.labels()).enumerate() {
            ensure(b == NOISE || b == h, || format!("case {case}: point {i} moved from {b} to {h}"))?;
        }
    }
    ensure(qualifying > 0, || "no instance produced a cluster".into())?;
    Ok(format!("{qualifying} qualifying instances, {reassigned} noise points reassigned"))
}

fn kmeans_contracts() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut iterations = 0;
    for run in 0..100 {
        let n = rng.random_range(10..=200);
        let d = rng.random_range(1..=8);
        let x = random_cloud(&mut rng, n, d);
        let k = rng.random_range(1..=8.min(n));
        let cfg = KMeansConfig::new(k).with_seed(run);
        let fit = kmeans_fit(&x, &cfg).map_err(|e| format!("run {run}: {e}"))?;
        iterations += fit.iterations;
        for w in fit.inertia_history.windows(2) {
            ensure(w[1] <= w[0] * (1.0 + 1e-12), || {
                format!("run {run}: inertia rose from {} to {}", w[0], w[1])
            })?;
        }
        let mut sizes = vec![0usize; k];
        for &a in &fit.assignment {
            sizes[a] += 1;
        }
        ensure(sizes.iter().all(|&s| s > 0), || format!("run {run}: cluster sizes {sizes:?}"))?;
        let part = fit.partition();
        ensure(part.n_clusters() == k, || format!("run {run}: {} clusters, k = {k}", part.n_clusters()))?;
        let again = kmeans(&x, &cfg).map_err(|e| format!("run {run}: {e}"))?;
        ensure(again == part, || format!("run {run}: repeated run differs"))?;
    }
    Ok(format!("100 runs, {iterations} Lloyd iterations checked"))
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn birch_cf_additivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut merges = 0;
    for chain in 0..200 {
        let d = rng.random_range(1..=16);
        let scale = 10f64.powi(rng.random_range(-3..=3));
        let groups: Vec<Vec<Vec<f64>>> = (0..rng.random_range(1..=12))
            .map(|_| {
                (0..rng.random_range(1..=20))
                    .map(|_| gaussian(&mut rng, d).iter().map(|v| v * scale + 3.0).collect())
                    .collect()
            })
            .collect();
        let entries: Vec<CfEntry> = groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|p| CfEntry::from_point(p))
                    .reduce(|a, b| cf_merge(&a, &b).expect("matching dims"))
                    .expect("non-empty group")
            })
            .collect();
        let mut acc = entries[0].clone();
        for e in &entries[1..] {
            acc = cf_merge(&acc, e).map_err(|e| format!("chain {chain}: {e}"))?;
            merges += 1;
        }
        let points: Vec<&Vec<f64>> = groups.iter().flatten().collect();
        let ls: Vec<f64> = (0..d).map(|k| points.iter().map(|p| p[k]).sum()).collect();
        let ss: f64 = points.iter().map(|p| p.iter().map(|v| v * v).sum::<f64>()).sum();
        ensure(acc.n == points.len(), || format!("chain {chain}: n = {} vs {}", acc.n, points.len()))?;
        ensure(rel_close(acc.ss, ss, 1e-9), || format!("chain {chain}: SS {} vs {ss}", acc.ss))?;
        for k in 0..d {
            let tol = 1e-9 * ls[k].abs().max(scale * points.len() as f64);
            ensure((acc.ls[k] - ls[k]).abs() <= tol, || {
                format!("chain {chain}: LS[{k}] {} vs {}", acc.ls[k], ls[k])
            })?;
        }
    }
    Ok(format!("200 chains, {merges} merges"))
}

/// Mean silhouette with noise excluded, singletons scored 0, `None` below
/// two clusters.
fn silhouette_reference(x: &[Vec<f64>], labels: &[Label]) -> Option<f64> {
    let ids: Vec<usize> = (0..x.len()).filter(|&i| labels[i] != NOISE).collect();
    let mut clusters: HashMap<Label, Vec<usize>> = HashMap::new();
    for &i in &ids {
        clusters.entry(labels[i]).or_default().push(i);
    }
    if clusters.len() < 2 {
        return None;
    }
    let total: f64 = ids
        .iter()
        .map(|&i| {
            let own = &clusters[&labels[i]];
            if own.len() == 1 {
                return 0.0;
            }
            let a = own.iter().filter(|&&j| j != i).map(|&j| dist(&x[i], &x[j])).sum::<f64>()
                / (own.len() - 1) as f64;
            let b = clusters
                .iter()
                .filter(|(l, _)| **l != labels[i])
                .map(|(_, m)| m.iter().map(|&j| dist(&x[i], &x[j])).sum::<f64>() / m.len() as f64)
                .fold(f64::INFINITY, f64::min);
            if a.max(b) > 0.0 {
                (b - a) / a.max(b)
            } else {
                0.0
            }
        })
        .sum();
    Some(total / ids.len() as f64)
}

const SEPARATION_SEED: u64 = 7;

fn synthetic_separation() -> Outcome {
    let spec = BlobSpec::new(4, 50, 32, 20.0, SEPARATION_SEED);
    let (x, y) = generate_vectors(&spec).map_err(|e| e.to_string())?;
    let ari = |p: &Partition| adjusted_rand(p.labels(), &y).map_err(|e| e.to_string());

    let mut report = Vec::new();
    let mut failures = Vec::new();
    for tag in [AlgorithmTag::Kmeans, AlgorithmTag::Birch] {
        let a = ari(&oracle_partition(&x, tag, 4, None, SEPARATION_SEED).map_err(|e| e.to_string())?)?;
        report.push(format!("{tag:?} {a:.4}"));
        if a != 1.0 {
            failures.push(format!("{tag:?} ARI {a}"));
        }
    }
    let mut dbscan_choice = None;
    for tag in [AlgorithmTag::Dbscan, AlgorithmTag::Hdbscan] {
        let grid = default_grid(tag, &x, SEPARATION_SEED).map_err(|e| e.to_string())?;
        let tuned = grid_search(&x, &grid).map_err(|e| e.to_string())?;
        let a = ari(&tuned.best_config.run(&x).map_err(|e| e.to_string())?)?;
        report.push(format!("{tag:?} {a:.4}"));
        if a != 1.0 {
            failures.push(format!("{tag:?} ARI {a}"));
        }
        if tag == AlgorithmTag::Dbscan {
            dbscan_choice = Some((grid, tuned.best_config));
        }
    }

    let (grid, chosen) = dbscan_choice.expect("DBSCAN was tuned");
    let raw: Vec<Vec<f64>> = x.iter().map(|v| v.vector.clone()).collect();
    let mut grid_max = f64::NEG_INFINITY;
    let mut chosen_score = None;
    for cfg in grid.configs().map_err(|e| e.to_string())? {
        let AlgoConfig::Dbscan(c) = cfg else {
            return Err("DBSCAN grid produced a foreign config".into());
        };
        let labels = dbscan_reference(&raw, c.eps, c.min_pts);
        if let Some(s) = silhouette_reference(&raw, &labels) {
            grid_max = grid_max.max(s);
            if cfg == chosen {
                chosen_score = Some(s);
            }
        }
    }
    match chosen_score {
        Some(s) if (grid_max - s).abs() <= 1e-9 => {}
        other => failures.push(format!("DBSCAN selection silhouette {other:?} vs grid max {grid_max}")),
    }
    let summary = format!("ARI: {}; DBSCAN grid max silhouette {grid_max:.6}", report.join(", "));
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{}; {summary}", failures.join("; ")))
    }
}

fn consolidation_recovery() -> Outcome {
    let seed = 11;
    let (x, y) = generate_vectors(&BlobSpec::new(4, 50, 32, 20.0, seed)).map_err(|e| e.to_string())?;
    let over = kmeans(&x, &KMeansConfig::new(8).with_seed(seed)).map_err(|e| e.to_string())?;
    ensure(over.n_clusters() == 8, || "over-segmented input lacks 8 clusters".into())?;
    // Each of the eight pieces must sit inside one true blob.
    let (hs, _) = homogeneity_completeness(over.labels(), &y).map_err(|e| e.to_string())?;
    ensure((hs - 1.0).abs() < 1e-12, || format!("over-segmentation mixes blobs (HS {hs})"))?;

    let agg = centroid_agglomerate(&x, &over, seed).map_err(|e| e.to_string())?;
    let agg_ari = adjusted_rand(agg.partition.labels(), &y).map_err(|e| e.to_string())?;
    let base = AlgoConfig::Kmeans(KMeansConfig::new(8).with_seed(seed));
    let ak = adaptive_k(&x, &base, &BootstrapConfig::new(20, 0.8, seed)).map_err(|e| e.to_string())?;
    let ak_ari = adjusted_rand(ak.partition.labels(), &y).map_err(|e| e.to_string())?;
    let summary = format!(
        "agglomerate m* = {} ARI {agg_ari:.4}; adaptive k_hat = {} (tau {}) ARI {ak_ari:.4}",
        agg.m_star, ak.k_hat, ak.tau
    );
    if agg.m_star == 4 && agg_ari == 1.0 && ak.k_hat == 4 && ak_ari == 1.0 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn coral_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (n, d) = (5000, 6);
    let mix: Vec<Vec<f64>> = (0..d).map(|_| gaussian(&mut rng, d)).collect();
    let offset: Vec<f64> = (0..d).map(|_| rng.random_range(-50.0..50.0)).collect();
    let source: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let z = gaussian(&mut rng, d);
            (0..d)
                .map(|r| 7.0 * (0..d).map(|c| mix[r][c] * z[c]).sum::<f64>() + offset[r])
                .collect()
        })
        .collect();

    // Reference covariance B Bᵀ + I, mean arbitrary.
    let b: Vec<Vec<f64>> = (0..d).map(|_| gaussian(&mut rng, d)).collect();
    let mut cov_r = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            cov_r[i * d + j] = (0..d).map(|k| b[i][k] * b[j][k]).sum::<f64>() + if i == j { 1.0 } else { 0.0 };
        }
    }
    let mu_r: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
    let reference = GroupStats {
        group_key: "ref".into(),
        count: n,
        mean: mu_r.clone(),
        covariance: cov_r.clone(),
        degenerate: false,
    };
    let src = GroupStats::from_vectors("src", &source).map_err(|e| e.to_string())?;
    let out = coral_align(&source, &src, &reference, 1e-6).map_err(|e| e.to_string())?;

    let mean: Vec<f64> = (0..d).map(|k| out.iter().map(|v| v[k]).sum::<f64>() / n as f64).collect();
    let mean_err = mean.iter().zip(&mu_r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut diff = 0.0;
    let mut norm = 0.0;
    for i in 0..d {
        for j in 0..d {
            let c = out.iter().map(|v| (v[i] - mean[i]) * (v[j] - mean[j])).sum::<f64>() / (n - 1) as f64;
            diff += (c - cov_r[i * d + j]).powi(2);
            norm += cov_r[i * d + j].powi(2);
        }
    }
    let rel = (diff / norm).sqrt();
    let summary = format!("mean error {mean_err:.1e}, relative covariance error {rel:.1e}");
    if mean_err <= 1e-6 && rel <= 1e-3 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn projection_contract() -> Outcome {
    let mut checked = 0;
    for d in 1..=128usize {
        for k in (1..=d).filter(|k| d % k == 0) {
            let rows: Vec<Vec<f32>> = (0..3).map(|r| (0..d).map(|c| (r * d + c) as f32).collect()).collect();
            let te = TokenEmbeddings::from_rows("x", &rows, 1).map_err(|e| e.to_string())?;
            let v = hybrid_pool(&te, &HybridConfig { kernel: k }).map_err(|e| e.to_string())?;
            ensure(v.dim() == d + d / k, || format!("D = {d}, k = {k}: dim {}", v.dim()))?;
            checked += 1;
        }
    }

    let rows = vec![vec![1.0, 2.0, 3.0, 4.0], vec![5.0, -6.0, 7.0, 8.0], vec![-1.0, 0.0, 9.0, 2.0]];
    let te = TokenEmbeddings::from_rows("hand", &rows, 1).map_err(|e| e.to_string())?;
    let mean = mean_pool(&te).vector;
    ensure(mean == vec![5.0 / 3.0, -4.0 / 3.0, 19.0 / 3.0, 14.0 / 3.0], || format!("mean {mean:?}"))?;
    let cls = cls_pool(&te).vector;
    ensure(cls == vec![1.0, 2.0, 3.0, 4.0], || format!("cls {cls:?}"))?;
    // Text mean is row 0; image rows max-pool to [5, 8] and [0, 9], averaging to [2.5, 8.5].
    let hybrid = hybrid_pool(&te, &HybridConfig { kernel: 2 }).map_err(|e| e.to_string())?.vector;
    ensure(hybrid == vec![1.0, 2.0, 3.0, 4.0, 2.5, 8.5], || format!("hybrid {hybrid:?}"))?;
    Ok(format!("{checked} (D, k) pairs, hand examples exact"))
}

fn robustness_direction() -> Outcome {
    let (sep, magnitude, seeds) = (12.0, 10.0, 8u64);
    let mut lines = Vec::new();
    let mut ok = true;
    for tag in [AlgorithmTag::Dbscan, AlgorithmTag::Hdbscan] {
        let (mut drop_plain, mut drop_shift) = (0.0, 0.0);
        for seed in 0..seeds {
            let spec = BlobSpec::new(4, 50, 32, sep, seed);
            let run = |spec: &BlobSpec, cfg: &AlgoConfig| -> Result<f64, String> {
                let (x, y) = generate_vectors(spec).map_err(|e| e.to_string())?;
                let p = cfg.run(&x).map_err(|e| e.to_string())?;
                adjusted_rand(p.labels(), &y).map_err(|e| e.to_string())
            };
            // Parameters are tuned once on clean data, then reused.
            let (x, _) = generate_vectors(&spec).map_err(|e| e.to_string())?;
            let grid = default_grid(tag, &x, seed).map_err(|e| e.to_string())?;
            let cfg = grid_search(&x, &grid).map_err(|e| e.to_string())?.best_config;
            let clean = run(&spec, &cfg)?;
            let fresh = run(&BlobSpec { seed: seed + 1000, ..spec }, &cfg)?;
            let shifted = run(&BlobSpec { shift: Shift::Covariate { magnitude }, ..spec }, &cfg)?;
            drop_plain += clean - fresh;
            drop_shift += clean - shifted;
        }
        let (dp, ds) = (drop_plain / seeds as f64, drop_shift / seeds as f64);
        ok &= ds > dp;
        lines.push(format!("{tag:?} drop {ds:.3} shifted vs {dp:.3} unshifted"));
    }
    if ok {
        Ok(lines.join("; "))
    } else {
        Err(lines.join("; "))
    }
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { name: "golden page graph", limit: Some(Duration::from_secs(1)), check: golden_graph },
        Criterion { name: "metric oracle suite", limit: Some(Duration::from_secs(10)), check: metric_oracle },
        Criterion { name: "DBSCAN equivalence", limit: Some(Duration::from_secs(30)), check: dbscan_equivalence },
        Criterion { name: "HDBSCAN MST weight", limit: None, check: hdbscan_mst },
        Criterion { name: "HDBSCAN+kNN contract", limit: None, check: hdbscan_knn_contract },
        Criterion { name: "k-means contracts", limit: None, check: kmeans_contracts },
        Criterion { name: "BIRCH CF additivity", limit: None, check: birch_cf_additivity },
        Criterion { name: "synthetic separation", limit: Some(Duration::from_secs(60)), check: synthetic_separation },
        Criterion {
            name: "consolidation recovery",
            limit: Some(Duration::from_secs(120)),
            check: consolidation_recovery,
        },
        Criterion { name: "CORAL contract", limit: None, check: coral_contract },
        Criterion { name: "projection dimensions", limit: None, check: projection_contract },
        Criterion { name: "robustness under shift", limit: None, check: robustness_direction },
    ];

    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.check)();
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS  {:<26} {detail} [{elapsed:.2?}]", c.name),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {:<26} {detail} [{elapsed:.2?}]", c.name);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
