//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use halluzig::classify::{auroc, tpr_at_fpr};
use halluzig::ingest::{read_dataset_manifest, AttentionGraph, DatasetEntry, Edge};
use halluzig::pipeline::{
    depth_sweep, featurize_dataset, featurize_dataset_static, synth_dataset, train_eval, RunConfig, SynthParams,
};
use halluzig::vectorize::{betti_curve, normalize_diagram, persistence_entropy, persistence_image, ImageGrid};
use halluzig::zigzag::{
    betti_numbers, build_zigzag, compute_zigzag_persistence, standard_persistence, PersistenceDiagram,
    PersistenceInterval, ZigzagFiltration,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn FnMut() -> Outcome + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_graph(rng: &mut ChaCha8Rng, layer: usize, t: usize, density: f64) -> AttentionGraph {
    let mut edges = Vec::new();
    for u in 0..t as u32 {
        for v in u + 1..t as u32 {
            if rng.random_bool(density) {
                edges.push((Edge::new(u, v), rng.random::<f64>()));
            }
        }
    }
    AttentionGraph::from_edges(layer, t, edges).unwrap()
}

fn random_layers(rng: &mut ChaCha8Rng) -> Vec<AttentionGraph> {
    let t = rng.random_range(2..=12);
    let l = rng.random_range(2..=8);
    let density = rng.random_range(0.05..0.6);
    (1..=l).map(|layer| random_graph(rng, layer, t, density)).collect()
}

fn barcode(f: &ZigzagFiltration) -> PersistenceDiagram {
    compute_zigzag_persistence(f, 1).unwrap()
}

fn betti_sum_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checks = 0;
    for trial in 0..200 {
        let f = build_zigzag(&random_layers(&mut rng)).unwrap();
        let d = barcode(&f);
        for i in 1..=f.max_index() {
            let (b0, b1) = betti_numbers(f.num_vertices(), &f.snapshot(i).edge_list());
            ensure(d.count_alive(0, i) == b0 && d.count_alive(1, i) == b1, || {
                format!(
                    "trial {trial} index {i}: bars ({}, {}) vs betti ({b0}, {b1})",
                    d.count_alive(0, i),
                    d.count_alive(1, i)
                )
            })?;
            checks += 2;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("{checks} exact checks in {elapsed:.2?}"))
}

fn hand_computed() -> Outcome {
    let g = |layer, pairs: &[(u32, u32)]| {
        let shifted: Vec<_> = pairs.iter().map(|&(a, b)| (a - 1, b - 1)).collect();
        AttentionGraph::unweighted(layer, 3, &shifted).unwrap()
    };
    let bars = |d: &PersistenceDiagram, dim| d.of_dim(dim).map(|i| (i.birth, i.death)).collect::<Vec<_>>();

    let triangle = barcode(&build_zigzag(&[g(1, &[(1, 2), (2, 3), (1, 3)]), g(2, &[(1, 2), (2, 3)])]).unwrap());
    ensure(bars(&triangle, 1) == [(1, 2)], || {
        format!("triangle H1 {:?}", bars(&triangle, 1))
    })?;
    ensure(bars(&triangle, 0) == [(1, 3)], || {
        format!("triangle H0 {:?}", bars(&triangle, 0))
    })?;

    let disjoint = barcode(&build_zigzag(&[g(1, &[(1, 2)]), g(2, &[(2, 3)])]).unwrap());
    ensure(bars(&disjoint, 0) == [(1, 1), (1, 3), (3, 3)], || {
        format!("disjoint H0 {:?}", bars(&disjoint, 0))
    })?;
    ensure(bars(&disjoint, 1).is_empty(), || {
        format!("disjoint H1 {:?}", bars(&disjoint, 1))
    })?;
    Ok("triangle-then-broken and disjoint-edges match".into())
}

fn reversal() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2025);
    for trial in 0..50 {
        let layers = random_layers(&mut rng);
        let m = 2 * layers.len();
        let mut reversed = layers.clone();
        reversed.reverse();
        let fwd = barcode(&build_zigzag(&layers).unwrap());
        let bwd = barcode(&build_zigzag(&reversed).unwrap());
        let mut mirrored: Vec<_> = fwd
            .intervals()
            .iter()
            .map(|i| PersistenceInterval::new(i.dim, m - i.death, m - i.birth))
            .collect();
        mirrored.sort();
        ensure(mirrored.as_slice() == bwd.intervals(), || format!("trial {trial}"))?;
    }
    Ok("50 mirrored barcodes equal".into())
}

fn monotone() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    for trial in 0..50 {
        let t = rng.random_range(2..=12);
        let l = rng.random_range(2..=8);
        let mut present = BTreeSet::new();
        let mut layers = Vec::new();
        for layer in 1..=l {
            for u in 0..t as u32 {
                for v in u + 1..t as u32 {
                    if rng.random_bool(0.12) {
                        present.insert(Edge::new(u, v));
                    }
                }
            }
            layers.push(AttentionGraph::from_edges(layer, t, present.iter().map(|&e| (e, 1.0))).unwrap());
        }
        let f = build_zigzag(&layers).unwrap();
        let mut entries: Vec<(Edge, usize)> = Vec::new();
        for i in 1..=f.max_index() {
            for e in f.snapshot(i).edges() {
                if !entries.iter().any(|&(x, _)| x == e) {
                    entries.push((e, i));
                }
            }
        }
        let mut expected = standard_persistence(t, 1, &entries, f.max_index());
        expected.sort();
        ensure(barcode(&f).intervals() == expected.as_slice(), || {
            format!("trial {trial}")
        })?;
    }
    Ok("50 nested sequences match column reduction".into())
}

/// Midpoint-rule integral of the truncated Gaussian over the unit square.
fn quadrature_mass(x: f64, y: f64, sigma: f64, n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (u, v) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            let r2 = (u - x).powi(2) + (v - y).powi(2);
            total += (-r2 / (2.0 * sigma * sigma)).exp();
        }
    }
    total * h * h / (2.0 * std::f64::consts::PI * sigma * sigma)
}

fn vectorizer_units() -> Outcome {
    let diag = |bars: &[(usize, usize)], max| {
        PersistenceDiagram::new(
            bars.iter().map(|&(b, d)| PersistenceInterval::new(1, b, d)).collect(),
            1,
            max,
        )
    };
    let e = persistence_entropy(&diag(&[(1, 3), (4, 6)], 9));
    ensure((e - std::f64::consts::LN_2).abs() <= 1e-12, || format!("entropy {e}"))?;

    ensure(betti_curve(&diag(&[(2, 4)], 5), 5) == [0.0, 1.0, 1.0, 1.0, 0.0], || {
        "curve [2,4]".into()
    })?;
    ensure(betti_curve(&diag(&[], 5), 5) == [0.0; 5], || "empty curve".into())?;
    ensure(
        betti_curve(&diag(&[(1, 5), (3, 5)], 5), 5) == [1.0, 1.0, 2.0, 2.0, 2.0],
        || "curve two bars".into(),
    )?;

    let sigma = 1.0 / 32.0;
    let grid = ImageGrid::square(32, sigma);
    let mut worst: f64 = 0.0;
    // interior: at least 4 sigma from every edge of the unit square
    for &(b, d, max) in &[(11, 30, 40), (5, 20, 30), (20, 35, 47), (12, 30, 41)] {
        let nd = normalize_diagram(&diag(&[(b, d)], max));
        let (x, y) = nd.points[0];
        let margin = 4.0 * sigma;
        ensure(x.min(y) >= margin && x.max(y) <= 1.0 - margin, || {
            format!("({x}, {y}) is not interior")
        })?;
        let mass: f64 = persistence_image(&nd, &grid).iter().sum();
        let oracle = quadrature_mass(x, y, sigma, 1024);
        ensure((mass - 1.0).abs() <= 1e-3 && (mass - oracle).abs() <= 1e-3, || {
            format!("point ({x:.3}, {y:.3}): image mass {mass}, quadrature {oracle}")
        })?;
        worst = worst.max((mass - 1.0).abs());
    }
    Ok(format!(
        "entropy ln 2, curves exact, image mass within {worst:.1e} of 1"
    ))
}

fn brute_auroc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                wins += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    wins / pairs
}

fn metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2027);
    for trial in 0..100 {
        let n = rng.random_range(2..=50);
        let mut labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 / 8.0).collect();
        let got = auroc(&scores, &labels).unwrap();
        let want = brute_auroc(&scores, &labels);
        ensure(got == want, || format!("trial {trial}: {got} vs {want}"))?;
    }
    let mut scores = vec![0.99];
    let mut labels = vec![0u8];
    for i in 0..20 {
        scores.push(0.9 - i as f64 * 0.01);
        labels.push(1);
    }
    for i in 0..19 {
        scores.push(0.3 - i as f64 * 0.01);
        labels.push(0);
    }
    let tpr = tpr_at_fpr(&scores, &labels, 0.05).unwrap();
    ensure(tpr == 1.0, || format!("one admitted false positive: TPR {tpr}"))?;
    let tpr = tpr_at_fpr(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0], 0.05).unwrap();
    ensure(tpr == 1.0, || format!("separable: TPR {tpr}"))?;
    Ok("100 AUROC sets exact, TPR examples exact".into())
}

fn frozen_config() -> RunConfig {
    RunConfig {
        seed: 7,
        ..RunConfig::default()
    }
}

fn synthetic_end_to_end(entries: &[DatasetEntry], zigzag_auroc: &mut Option<f64>) -> Outcome {
    let start = Instant::now();
    let cfg = frozen_config();
    let table = featurize_dataset(entries, &cfg).map_err(|e| e.to_string())?.table;
    let report = train_eval(&table, &cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let auc = report.runs[0].report.auroc;
    *zigzag_auroc = Some(auc);
    ensure(auc >= 0.90, || format!("AUROC {auc}"))?;
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "AUROC {auc:.4} on {} test samples in {elapsed:.2?}",
        report.runs[0].report.n_test
    ))
}

fn depth_property(entries: &[DatasetEntry]) -> Outcome {
    let rows = depth_sweep(entries, &frozen_config(), &[0.7, 1.0]).map_err(|e| e.to_string())?;
    let (f07, f10) = (rows[0].report.runs[0].report.f1, rows[1].report.runs[0].report.f1);
    ensure(f07 >= 0.95 * f10, || format!("F1 {f07} at 0.7 vs {f10} at 1.0"))?;
    Ok(format!("F1 {f07:.4} at 0.7, {f10:.4} at 1.0"))
}

fn static_direction(entries: &[DatasetEntry], zigzag_auroc: Option<f64>) -> Outcome {
    let cfg = frozen_config();
    let zz = zigzag_auroc.ok_or("zigzag run unavailable")?;
    let table = featurize_dataset_static(entries, &cfg)
        .map_err(|e| e.to_string())?
        .table;
    let st = train_eval(&table, &cfg).map_err(|e| e.to_string())?.runs[0]
        .report
        .auroc;
    ensure(zz >= st, || format!("zigzag {zz} < static {st}"))?;
    Ok(format!("zigzag AUROC {zz:.4} >= static {st:.4}"))
}

fn determinism(manifest: &Path, work: &Path) -> Outcome {
    let bin = env!("CARGO_BIN_EXE_halluzig");
    let run = |tag: &str| -> Result<(Vec<u8>, Vec<u8>), String> {
        let feats = work.join(format!("features_{tag}.csv"));
        let report = work.join(format!("report_{tag}.json"));
        let ok = |args: &[&str]| -> Result<(), String> {
            let out = Command::new(bin).args(args).output().map_err(|e| e.to_string())?;
            ensure(out.status.success(), || {
                String::from_utf8_lossy(&out.stderr).into_owned()
            })
        };
        ok(&[
            "featurize",
            manifest.to_str().unwrap(),
            "--out",
            feats.to_str().unwrap(),
            "--seed",
            "7",
        ])?;
        ok(&[
            "train-eval",
            feats.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
            "--seed",
            "7",
        ])?;
        Ok((fs::read(&feats).unwrap(), fs::read(&report).unwrap()))
    };
    let a = run("a")?;
    let b = run("b")?;
    ensure(a.0 == b.0, || "feature tables differ".into())?;
    ensure(a.1 == b.1, || "reports differ".into())?;
    Ok(format!(
        "{} table bytes and {} report bytes identical",
        a.0.len(),
        a.1.len()
    ))
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temp dir");
    let params = SynthParams {
        samples_per_class: 200,
        seq_len: 20,
        num_layers: 12,
        seed: 7,
        ..SynthParams::default()
    };
    let manifest = synth_dataset(&params, tmp.path().join("synthetic")).expect("synthetic dataset");
    let entries = read_dataset_manifest(&manifest).expect("manifest");
    let mut zigzag_auroc = None;

    let mut criteria: Vec<Criterion> = vec![
        ("betti-sum oracle", Box::new(betti_sum_oracle)),
        ("hand-computed barcodes", Box::new(hand_computed)),
        ("reversal symmetry", Box::new(reversal)),
        ("monotone cross-check", Box::new(monotone)),
        ("vectorizer units", Box::new(vectorizer_units)),
        ("metric oracle", Box::new(metric_oracle)),
    ];
    let mut results = Vec::new();
    for (name, check) in criteria.iter_mut() {
        results.push((*name, catch_unwind(AssertUnwindSafe(check))));
    }
    results.push((
        "synthetic end-to-end",
        catch_unwind(AssertUnwindSafe(|| synthetic_end_to_end(&entries, &mut zigzag_auroc))),
    ));
    results.push((
        "depth-sweep property",
        catch_unwind(AssertUnwindSafe(|| depth_property(&entries))),
    ));
    results.push((
        "static-vs-zigzag direction",
        catch_unwind(AssertUnwindSafe(|| static_direction(&entries, zigzag_auroc))),
    ));
    results.push((
        "determinism",
        catch_unwind(AssertUnwindSafe(|| determinism(&manifest, tmp.path()))),
    ));

    let mut failed = 0;
    for (name, result) in results {
        match result {
            Ok(Ok(detail)) => println!("PASS  {name}: {detail}"),
            Ok(Err(detail)) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL  {name}: panicked");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
