//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use cocluster::clustering::{self, weighted_kmeans};
use cocluster::cuts::{bound_report, min_two_way_cut_bruteforce};
use cocluster::io;
use cocluster::metrics::adjusted_rand_index;
use cocluster::models::{self, DirectedGraph, PlantedModel};
use cocluster::regularity::{self, EnumerationCaps};
use cocluster::report::{self, AnalysisConfig, AnalysisReport};
use cocluster::spectral::{self, objective_q, representatives, weighted_gram};
use cocluster::{Axis, ClusterAssignment, ContingencyTable, IndexSubset, KMeansConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn example() -> ContingencyTable {
    ContingencyTable::from_rows(&[[0.4, 0.1], [0.1, 0.4]]).unwrap()
}

/// Positive entries with about a fifth zeroed, redrawn until non-decomposable.
fn random_table(rng: &mut Xoshiro256StarStar, n: usize, m: usize) -> ContingencyTable {
    loop {
        let values: Vec<f64> =
            (0..n * m).map(|_| if rng.random::<f64>() < 0.2 { 0.0 } else { rng.random::<f64>() + 1e-3 }).collect();
        if let Ok(t) = ContingencyTable::from_dense(n, m, values) {
            if t.is_nondecomposable() {
                return t.normalized();
            }
        }
    }
}

/// Singular values of the correspondence matrix from the eigenvalues of its Gram matrix.
fn oracle_singular_values(t: &ContingencyTable) -> Vec<f64> {
    let total = t.total();
    let c = DMatrix::from_fn(t.n_rows(), t.n_cols(), |i, j| {
        t.entry(i, j) / total / ((t.row_sums()[i] / total) * (t.col_sums()[j] / total)).sqrt()
    });
    let gram = if c.nrows() <= c.ncols() { &c * c.transpose() } else { c.transpose() * &c };
    let mut s: Vec<f64> = gram.symmetric_eigenvalues().iter().map(|e| e.max(0.0).sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let spent = start.elapsed();
    if spent > limit {
        Err(format!("took {spent:.2?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = Xoshiro256StarStar::seed_from_u64(1);
    let mut checks = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(3..=12);
        let m = rng.random_range(3..=9);
        let t = random_table(&mut rng, n, m);
        let d = spectral::decompose_table(&t).unwrap();
        let oracle = oracle_singular_values(&t);
        for k in 1..=3 {
            let rep = representatives(&t, &d, k).map_err(|e| format!("{n}x{m} k={k}: {e}"))?;
            let expected = 2.0 * k as f64 - 2.0 * oracle[..k].iter().sum::<f64>();
            let q = objective_q(&t, &rep).unwrap();
            worst = worst.max((q - expected).abs());
            ensure!((q - expected).abs() <= 1e-9, "{n}x{m} k={k}: Q = {q}, expected {expected}");
            let id = DMatrix::<f64>::identity(k, k);
            let gx = (weighted_gram(&rep.row_reps, t.row_sums()) - &id).amax();
            let gy = (weighted_gram(&rep.col_reps, t.col_sums()) - &id).amax();
            ensure!(gx <= 1e-9 && gy <= 1e-9, "{n}x{m} k={k}: Gram deviation {gx:e} / {gy:e}");
            checks += 1;
        }
    }
    within(Duration::from_secs(5), start)?;
    Ok(format!("{checks} optima matched, max |Q - (2k - 2 sum s)| = {worst:.1e}, {:.2?}", start.elapsed()))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let r = bound_report(&example(), 2, false).unwrap();
    ensure!((r.nu_k - 0.8).abs() < 1e-12, "fixture nu_2 = {}", r.nu_k);
    ensure!((r.corrected_bound - 0.8).abs() < 1e-12, "fixture corrected bound = {}", r.corrected_bound);

    let mut rng = Xoshiro256StarStar::seed_from_u64(2);
    let mut printed_violations = Vec::new();
    let mut slack = f64::INFINITY;
    for idx in 0..50 {
        let t = random_table(&mut rng, 6, 6);
        let oracle = oracle_singular_values(&t);
        for k in [2, 3] {
            let min = min_two_way_cut_bruteforce(&t, k, false).unwrap();
            let corrected = 2.0 * k as f64 - 2.0 * oracle[..k].iter().sum::<f64>();
            let printed = 2.0 * k as f64 - oracle[..k].iter().sum::<f64>();
            ensure!(min.nu >= corrected - 1e-9, "table {idx} k={k}: nu = {} < {corrected}", min.nu);
            slack = slack.min(min.nu - corrected);
            if printed > min.nu {
                printed_violations.push((idx, k, printed, min.nu));
            }
        }
    }
    if r.printed_bound > r.nu_k {
        printed_violations.push((usize::MAX, 2, r.printed_bound, r.nu_k));
    }
    ensure!(!printed_violations.is_empty(), "no instance where 2k - sum s exceeds nu_k");
    within(Duration::from_secs(30), start)?;
    let (idx, k, p, nu) = printed_violations[0];
    let which = if idx == usize::MAX { "fixture".to_string() } else { format!("table {idx}") };
    Ok(format!(
        "100 minima above the corrected bound (min slack {slack:.3e}); fixture nu_2 = 0.8 attains it; \
         2k - sum s exceeds nu_k on {} cases, e.g. {which} k={k}: {p:.4} > {nu:.4}; {:.2?}",
        printed_violations.len(),
        start.elapsed()
    ))
}

fn mixing_instances() -> Vec<ContingencyTable> {
    let mut rng = Xoshiro256StarStar::seed_from_u64(3);
    (0..50).map(|_| random_table(&mut rng, 8, 8)).collect()
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let caps = EnumerationCaps::default();
    let mut worst_margin = f64::INFINITY;
    for (idx, t) in mixing_instances().iter().enumerate() {
        let d = spectral::decompose_table(t).unwrap();
        let check = regularity::mixing_check(t, &d, &caps).unwrap();
        ensure!(check.max_ratio <= d.s(2) + 1e-9, "table {idx}: ratio {} > s2 {}", check.max_ratio, d.s(2));
        worst_margin = worst_margin.min(d.s(2) - check.max_ratio);
    }
    let t = example();
    let alpha = regularity::discrepancy_bruteforce(&t, &caps).unwrap();
    let s2 = spectral::decompose_table(&t).unwrap().s(2);
    ensure!((alpha - 0.3).abs() < 1e-12 && (s2 - 0.6).abs() < 1e-12, "fixture alpha {alpha}, s2 {s2}");
    within(Duration::from_secs(10), start)?;
    Ok(format!("50 tables within s2 (smallest margin {worst_margin:.3e}); fixture alpha = 0.3 <= s2 = 0.6; {:.2?}", start.elapsed()))
}

fn criterion_4() -> Outcome {
    let caps = EnumerationCaps::default();
    let mut applied = 0;
    let mut tightest = f64::INFINITY;
    for (idx, t) in mixing_instances().iter().enumerate() {
        let s2 = spectral::decompose_table(t).unwrap().s(2);
        let alpha = regularity::discrepancy_bruteforce(t, &caps).unwrap();
        if !(alpha > 0.0 && alpha < 1.0) {
            continue;
        }
        let rhs = 150.0 * alpha * (1.0 - 8.0 * alpha.ln());
        ensure!(s2 <= rhs + 1e-9, "table {idx}: s2 {s2} > {rhs}");
        let check = regularity::butler_converse_check(s2, alpha);
        ensure!(check.holds == Some(true), "table {idx}: library check disagrees");
        tightest = tightest.min(rhs / s2);
        applied += 1;
    }
    ensure!(applied > 0, "no instance with alpha in (0, 1)");
    Ok(format!("{applied} instances satisfy s2 <= 150 a (1 - 8 ln a); smallest rhs/s2 = {tightest:.1}"))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut rng = Xoshiro256StarStar::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for idx in 0..100 {
        let a = DMatrix::from_fn(6, 8, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let cut = regularity::cut_norm_bruteforce(&a, &EnumerationCaps::default()).unwrap();
        let spectral_norm = (a.transpose() * &a).symmetric_eigenvalues().iter().copied().fold(0.0, f64::max).sqrt();
        let bound = 48f64.sqrt() * spectral_norm;
        ensure!(cut <= bound + 1e-9, "matrix {idx}: cut norm {cut} > {bound}");
        ensure!((regularity::cut_norm_spectral_bound(&a) - bound).abs() < 1e-9, "matrix {idx}: bound mismatch");
        worst = worst.max(cut / bound);
    }
    within(Duration::from_secs(5), start)?;
    Ok(format!("100 matrices within sqrt(48) ||A||_2 (largest ratio {worst:.3}); {:.2?}", start.elapsed()))
}

fn block_fixture(k: usize) -> (ContingencyTable, Vec<usize>, Vec<usize>) {
    let (rl, cl, rw, cw, b): (Vec<usize>, Vec<usize>, Vec<f64>, Vec<f64>, Vec<Vec<f64>>) = if k == 2 {
        (
            vec![0, 1, 0, 1, 1, 0, 0],
            vec![1, 0, 0, 1, 0, 1],
            vec![1.0, 2.0, 0.5, 1.5, 1.0, 3.0, 0.7],
            vec![0.3, 1.0, 2.0, 1.2, 0.7, 1.1],
            vec![vec![3.0, 0.5], vec![0.4, 2.0]],
        )
    } else {
        (
            vec![0, 1, 0, 2, 1, 2, 2, 0],
            vec![2, 0, 1, 1, 0, 2, 2, 1, 0],
            vec![1.0, 2.0, 0.5, 1.5, 1.0, 3.0, 0.8, 1.3],
            vec![0.3, 1.0, 2.0, 1.2, 0.7, 1.1, 0.4, 0.9, 1.6],
            vec![vec![3.0, 1.0, 0.5], vec![0.2, 2.0, 1.0], vec![1.0, 0.4, 4.0]],
        )
    };
    let t = models::block_constant_table(&rl, &cl, &rw, &cw, &b).unwrap();
    let q: Vec<f64> = (0..k).map(|c| cl.iter().zip(&cw).filter(|(l, _)| **l == c).map(|(_, w)| w).sum()).collect();
    for (i, &a) in rl.iter().enumerate() {
        let expected = rw[i] * (0..k).map(|c| b[a][c] * q[c]).sum::<f64>();
        assert!((t.row_sums()[i] - expected).abs() < 1e-12);
    }
    (t.normalized(), rl, cl)
}

fn criterion_6() -> Outcome {
    let mut lines = Vec::new();
    for k in [2, 3] {
        let (t, rl, cl) = block_fixture(k);
        let d = spectral::decompose_table(&t).unwrap();
        let a = clustering::bicluster_with(&t, &d, k, &KMeansConfig::default()).unwrap();
        ensure!(a.row_variance < 1e-10 && a.col_variance < 1e-10, "k={k}: variances {} {}", a.row_variance, a.col_variance);
        ensure!(d.s(k + 1) < 1e-10, "k={k}: s_(k+1) = {}", d.s(k + 1));
        ensure!(adjusted_rand_index(&a.row_labels, &rl) == 1.0 && adjusted_rand_index(&a.col_labels, &cl) == 1.0, "k={k}: blocks not recovered");
        let r = regularity::k_way_discrepancy(&t, &d, &a, &EnumerationCaps::default());
        let mut worst: f64 = 0.0;
        for x in 0..k {
            for y in 0..k {
                let rows = IndexSubset::from_unsorted(Axis::Row, a.row_cluster(x));
                let cols = IndexSubset::from_unsorted(Axis::Column, a.col_cluster(y));
                let g = regularity::volume_regularity_bruteforce(&t, &rows, &cols, &EnumerationCaps::default()).unwrap();
                ensure!(g < 1e-10, "k={k}: pair ({x},{y}) gamma {g:e}");
                ensure!(r.pair_gammas[x][y].is_exact(), "k={k}: pair ({x},{y}) not enumerated");
                worst = worst.max(g);
            }
        }
        let kway = r.k_way_discrepancy.value.unwrap();
        ensure!(kway < 1e-10 && r.k_way_discrepancy.is_exact(), "k={k}: k-way discrepancy {kway:e}");
        lines.push(format!("k={k}: S^2 {:.0e}/{:.0e}, s_(k+1) {:.0e}, max gamma {worst:.0e}", a.row_variance, a.col_variance, d.s(k + 1)));
    }
    Ok(lines.join("; "))
}

/// Gamma of a recovered pair, enumerated over the first ten members of each cluster.
fn subsample_gamma(t: &ContingencyTable, a: &ClusterAssignment) -> f64 {
    let caps = EnumerationCaps::default();
    let mut worst: f64 = 0.0;
    for x in 0..a.k {
        for y in 0..a.k {
            let rows = a.row_cluster(x);
            let cols = a.col_cluster(y);
            let sample_rows = IndexSubset::from_unsorted(Axis::Row, rows.iter().copied().take(10).collect());
            let sample_cols = IndexSubset::from_unsorted(Axis::Column, cols.iter().copied().take(10).collect());
            let g = regularity::volume_regularity_sampled(
                t,
                &IndexSubset::from_unsorted(Axis::Row, rows),
                &IndexSubset::from_unsorted(Axis::Column, cols),
                &sample_rows,
                &sample_cols,
                &caps,
            )
            .unwrap();
            worst = worst.max(g);
        }
    }
    worst
}

fn criterion_7(monotone: &mut Vec<bool>) -> Outcome {
    let start = Instant::now();
    let mut exact = 0;
    let mut ratios = Vec::new();
    let mut max_s4: f64 = 0.0;
    for seed in 0..20 {
        let model = PlantedModel::diagonal(3, 120, 180, 0.8, 0.1, seed).unwrap();
        let p = models::generate_planted(&model).unwrap();
        let check = models::spectral_characterization_check(&p.table, 3, &p.row_truth, &p.col_truth, None, &KMeansConfig::default())
            .unwrap();
        monotone.push(check.assignment.lloyd_monotone);
        let d = spectral::decompose_table(&p.table).unwrap();
        let fixed = spectral::structural_k(&d.singular_values, 0.25).count;
        ensure!(check.structural_count == 3 && fixed == 3, "seed {seed}: structural counts {} / {fixed}", check.structural_count);
        ensure!(d.s(4) < 0.25, "seed {seed}: s4 = {}", d.s(4));
        max_s4 = max_s4.max(d.s(4));
        if check.row_match == 1.0 && check.col_match == 1.0 {
            exact += 1;
        }
        let bound = regularity::theorem_bound(&d, 3, check.skx.sqrt(), check.sky.sqrt()).unwrap();
        let gamma = subsample_gamma(&p.table, &check.assignment);
        ensure!(gamma <= 10.0 * bound, "seed {seed}: subsample gamma {gamma} > 10 x {bound}");
        ratios.push(gamma / bound);
    }
    ensure!(exact >= 18, "ARI = 1 on only {exact} of 20 seeds");
    within(Duration::from_secs(60), start)?;
    let list = ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(",");
    Ok(format!(
        "ARI 1.0 on {exact}/20 seeds, 3 structural values on all, max s4 = {max_s4:.3}; gamma/bound per seed [{list}]; {:.2?}",
        start.elapsed()
    ))
}

fn criterion_8(monotone: &[bool]) -> Outcome {
    let mut rng = Xoshiro256StarStar::seed_from_u64(8);
    let mut runs = 0;
    for trial in 0..30 {
        let n = rng.random_range(10..60);
        let d = rng.random_range(1..4);
        let k = rng.random_range(2..6);
        let points = DMatrix::from_fn(n, d, |_, _| rng.random::<f64>());
        let weights: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
        let fit = weighted_kmeans(&points, &weights, k, &KMeansConfig::with_seed(trial)).unwrap();
        for h in &fit.histories {
            ensure!(h.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-15), "trial {trial}: objective rose in {h:?}");
            runs += 1;
        }
        let again = weighted_kmeans(&points, &weights, k, &KMeansConfig::with_seed(trial)).unwrap();
        ensure!(again.labels == fit.labels && again.variance.to_bits() == fit.variance.to_bits(), "trial {trial}: not reproducible");
    }
    ensure!(monotone.iter().all(|&m| m), "a pipeline run in the suite was not monotone");
    for k in 2..6 {
        let points = DMatrix::from_fn(k, 2, |i, j| (i * 3 + j) as f64);
        let fit = weighted_kmeans(&points, &vec![1.0; k], k, &KMeansConfig::default()).unwrap();
        ensure!(fit.variance == 0.0, "{k} distinct points: variance {}", fit.variance);
    }
    Ok(format!("{runs} Lloyd runs non-increasing (+{} pipeline runs); distinct points give 0; seeds reproduce bitwise", monotone.len()))
}

fn criterion_9() -> Outcome {
    let w = 1.0 / 9.0;
    let circ = DirectedGraph::from_rows(&[[0.0, 2.0 * w, w], [w, 0.0, 2.0 * w], [2.0 * w, w, 0.0]]).unwrap();
    let d = spectral::decompose_table(&models::directed_to_table(&circ).unwrap()).unwrap();
    let expected = [1.0, 1.0 / 3f64.sqrt(), 1.0 / 3f64.sqrt()];
    ensure!(d.rank() == 3, "circulant rank {}", d.rank());
    for (s, e) in d.singular_values.iter().zip(expected) {
        ensure!((s - e).abs() < 1e-9, "circulant spectrum {:?}", d.singular_values);
    }
    let cycle = DirectedGraph::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
    ensure!(matches!(models::directed_to_table(&cycle), Err(cocluster::Error::DecomposableTable)), "2-cycle accepted");

    let sym = [
        [0.0, 4.0, 3.0, 1.0, 0.5, 0.2, 0.3],
        [4.0, 0.0, 5.0, 0.3, 0.1, 0.6, 0.2],
        [3.0, 5.0, 0.0, 0.4, 0.2, 0.1, 0.5],
        [1.0, 0.3, 0.4, 0.0, 6.0, 4.0, 3.0],
        [0.5, 0.1, 0.2, 6.0, 0.0, 5.0, 2.0],
        [0.2, 0.6, 0.1, 4.0, 5.0, 0.0, 4.5],
        [0.3, 0.2, 0.5, 3.0, 2.0, 4.5, 0.0],
    ];
    let g = DirectedGraph::from_rows(&sym).unwrap();
    let cfg = AnalysisConfig { k: Some(2), exhaustive: true, ..AnalysisConfig::default() };
    let directed = report::directed_document(&g, &cfg).unwrap();
    let table = ContingencyTable::from_rows(&sym).unwrap();
    let plain = report::regularity_document(&table, &cfg).unwrap();
    ensure!(directed.singular_values == plain.clusters.singular_values, "spectra differ");
    ensure!(directed.assignment == plain.clusters.assignment, "assignments differ");
    ensure!(directed.regularity == plain.regularity, "regularity reports differ");
    ensure!(io::to_document(&directed.regularity).unwrap() == io::to_document(&plain.regularity).unwrap(), "serialized reports differ");
    Ok("circulant spectrum (1, 1/sqrt3, 1/sqrt3); 2-cycle rejected; symmetric graph report identical to table pipeline".into())
}

fn criterion_10() -> Outcome {
    let caps = EnumerationCaps::default();
    let uniform = ContingencyTable::from_dense(5, 6, vec![1.0; 30]).unwrap().normalized();
    let r = [0.1, 0.3, 0.2, 0.25, 0.15];
    let q = [0.05, 0.2, 0.3, 0.1, 0.15, 0.2];
    let rank_one = ContingencyTable::from_dense(5, 6, (0..30).map(|x| r[x / 6] * q[x % 6]).collect()).unwrap();
    let mut worst_s: f64 = 0.0;
    let mut worst_alpha: f64 = 0.0;
    for (name, t) in [("uniform", &uniform), ("rank-one", &rank_one)] {
        let d = spectral::decompose_table(t).unwrap();
        for i in 2..=5 {
            ensure!(d.s(i) < 1e-12, "{name}: s_{i} = {:e}", d.s(i));
            worst_s = worst_s.max(d.s(i));
        }
        let oracle = oracle_singular_values(t);
        ensure!(oracle[1] < 1e-7, "{name}: oracle s2 = {:e}", oracle[1]);
        let alpha = regularity::discrepancy_bruteforce(t, &caps).unwrap();
        ensure!(alpha < 1e-12, "{name}: alpha = {alpha:e}");
        worst_alpha = worst_alpha.max(alpha);
    }
    Ok(format!("uniform and rank-one tables: max s_i (i >= 2) = {worst_s:.0e}, max alpha = {worst_alpha:.1e}"))
}

fn criterion_11() -> Outcome {
    let csv = io::parse_dense_csv("0.4,0.1\n0.1,0.4\n").unwrap();
    let mtx = io::parse_matrix_market(
        "%%MatrixMarket matrix coordinate real general\n2 2 4\n1 1 0.4\n1 2 0.1\n2 1 0.1\n2 2 0.4\n",
    )
    .unwrap();
    ensure!(csv.shape() == mtx.shape() && csv.to_dense_values() == mtx.to_dense_values(), "CSV and Matrix Market differ");
    ensure!(csv.row_sums() == mtx.row_sums() && csv.col_sums() == mtx.col_sums(), "margins differ");

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = AnalysisConfig { k: Some(2), exhaustive: true, ..AnalysisConfig::default() };
    let full = report::analyze(&csv, &cfg).unwrap();
    let path = dir.path().join("report.json");
    io::write_document(&full, &path).unwrap();
    let first = std::fs::read(&path).unwrap();
    let back: AnalysisReport = io::read_document(&path).unwrap();
    ensure!(back == full, "report changed on reading");
    io::write_document(&back, &path).unwrap();
    ensure!(std::fs::read(&path).unwrap() == first, "report round-trip not byte-identical");

    let model = PlantedModel::diagonal(3, 30, 45, 0.8, 0.1, 4).unwrap();
    let p = models::generate_planted(&model).unwrap();
    let a = clustering::bicluster(&p.table, 3, &KMeansConfig::default()).unwrap();
    let image = dir.path().join("heat.pgm");
    let sidecar = io::write_heatmap(&p.table, &a, &image).unwrap();
    let plotted = io::read_heatmap_values(&sidecar).unwrap();
    let mut order_r: Vec<usize> = (0..30).collect();
    order_r.sort_by_key(|&i| (a.row_labels[i], i));
    let mut order_c: Vec<usize> = (0..45).collect();
    order_c.sort_by_key(|&j| (a.col_labels[j], j));
    let raw = &p.counts;
    let total: f64 = raw.to_dense_values().iter().sum();
    let mut worst: f64 = 0.0;
    for (x, &i) in order_r.iter().enumerate() {
        let di: f64 = (0..45).map(|j| raw.entry(i, j)).sum();
        for (y, &j) in order_c.iter().enumerate() {
            let dj: f64 = (0..30).map(|i2| raw.entry(i2, j)).sum();
            let expected = raw.entry(i, j) * total / (di * dj);
            worst = worst.max((plotted[x][y] - expected).abs());
        }
    }
    ensure!(worst <= 1e-12, "sidecar deviates by {worst:e}");
    let bytes = std::fs::read(&image).unwrap();
    ensure!(bytes.starts_with(b"P5\n45 30\n255\n") && bytes.len() == 13 + 30 * 45, "unexpected image layout");
    Ok(format!("CSV == Matrix Market; report round-trip byte-identical ({} bytes); sidecar max deviation {worst:.1e}", first.len()))
}

fn main() {
    let suite_start = Instant::now();
    let mut monotone = Vec::new();
    let mut failures = 0;
    let mut record = |n: usize, outcome: std::thread::Result<Outcome>| {
        let (status, detail) = match outcome {
            Ok(Ok(detail)) => ("PASS", detail),
            Ok(Err(reason)) => ("FAIL", reason),
            Err(panic) => ("FAIL", format!("panicked: {:?}", panic.downcast_ref::<String>().map(String::as_str).or(panic.downcast_ref::<&str>().copied()))),
        };
        if status == "FAIL" {
            failures += 1;
        }
        println!("criterion {n:>2}: {status}  {detail}");
    };
    record(1, panic::catch_unwind(criterion_1));
    record(2, panic::catch_unwind(criterion_2));
    record(3, panic::catch_unwind(criterion_3));
    record(4, panic::catch_unwind(criterion_4));
    record(5, panic::catch_unwind(criterion_5));
    record(6, panic::catch_unwind(criterion_6));
    record(7, panic::catch_unwind(AssertUnwindSafe(|| criterion_7(&mut monotone))));
    record(8, panic::catch_unwind(AssertUnwindSafe(|| criterion_8(&monotone))));
    record(9, panic::catch_unwind(criterion_9));
    record(10, panic::catch_unwind(criterion_10));
    record(11, panic::catch_unwind(criterion_11));
    let total = suite_start.elapsed();
    let suite_ok = total <= Duration::from_secs(120);
    if !suite_ok {
        failures += 1;
    }
    println!("acceptance suite: {:.2?} ({})", total, if suite_ok { "within 2 minutes" } else { "over 2 minutes" });
    if failures > 0 {
        println!("{failures} acceptance check(s) failed");
        std::process::exit(1);
    }
}
