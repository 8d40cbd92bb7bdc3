//! End-to-end acceptance checks. Prints one `PASS`/`FAIL` line per criterion
//! and a summary. Failures make the process exit non-zero only when
//! `AUTOSEG_ACCEPTANCE_STRICT=1` is set, so the rest of the workspace tests
//! still run under `cargo test`.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use autoseg_core::corrupt::{make_test_case, plan_test_set};
use autoseg_core::metrics::ReportRow;
use autoseg_core::planes::PlaneAssembler;
use autoseg_core::{
    apply_corruption, average_precision, fuse_predictions, generate_mask, interpolate_patch, iterate_stacks,
    pixel_ap, rasterize, sample_ap, sample_polygon, sample_sphere, smooth_curve, ClosedCurve, CorruptionKind,
    CorruptionParams, Mask32, Modality, PolygonSpec, Reducer, RngStream, ScoredSet, Smoothing, ViewAxis,
    Volume32,
};
use rand::seq::SliceRandom;
use rand::Rng;
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_volume(stream: RngStream, shape: Vec<usize>) -> Volume32 {
    let mut rng = stream.rng();
    let n = shape.iter().product();
    Volume32::new("v", shape, (0..n).map(|_| rng.random::<f32>()).collect(), (0.0, 1.0)).unwrap()
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

/// Mean over positives of the precision among items scored at or above them.
fn brute_ap(scores: &[f64], labels: &[bool]) -> f64 {
    let mut sum = 0.0;
    let mut npos = 0;
    for i in (0..scores.len()).filter(|&i| labels[i]) {
        let (mut hits, mut seen) = (0usize, 0usize);
        for j in 0..scores.len() {
            if scores[j] >= scores[i] {
                seen += 1;
                hits += labels[j] as usize;
            }
        }
        sum += hits as f64 / seen as f64;
        npos += 1;
    }
    sum / npos as f64
}

fn ap_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = RngStream::new(0, 1).rng();
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let n = rng.random_range(1..=1000);
        let levels = rng.random_range(2..=50);
        let scores: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.3) { rng.random_range(0..levels) as f64 / levels as f64 } else { rng.random() })
            .collect();
        let p = rng.random_range(0.01..0.9);
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(p)).collect();
        if !labels.contains(&true) {
            labels[case % n] = true;
        }
        let got = average_precision(&ScoredSet::new(scores.clone(), labels.clone()).unwrap()).unwrap().ap;
        worst = worst.max((got - brute_ap(&scores, &labels)).abs());
    }
    let took = start.elapsed();
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    ensure(took < Duration::from_secs(30), || format!("took {}", secs(took)))?;
    Ok(format!("1000 sets, max deviation {worst:e}, {}", secs(took)))
}

fn random_baseline() -> Outcome {
    let start = Instant::now();
    let n = 200;
    let shape = vec![64, 64, 64];
    let root = RngStream::new(0, 0);
    let params = CorruptionParams::default();
    let plan = plan_test_set(root, n, 0.75, &CorruptionKind::ALL).map_err(|e| e.to_string())?;
    let mut masks: Vec<Mask32> = Vec::with_capacity(n);
    let mut preds = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (i, kind) in plan.iter().enumerate() {
        let volume = random_volume(root.fork(7).child(i as u64), shape.clone());
        let case = make_test_case(root, i, &volume, *kind, &params, (0.08, 0.115)).map_err(|e| e.to_string())?;
        labels.push(!case.mask.is_empty());
        masks.push(case.mask);
        preds.push(random_volume(root.fork(9).child(i as u64), shape.clone()));
    }
    let pixel = pixel_ap(&preds, &masks).map_err(|e| e.to_string())?;
    let sample = sample_ap(&preds, &labels, Reducer::Max).map_err(|e| e.to_string())?;
    let prevalence = pixel.prevalence();
    let rel = (pixel.ap - prevalence).abs() / prevalence;
    let took = start.elapsed();
    let detail = format!(
        "sample AP {:.4} (target 0.75 +- 0.03), pixel AP {:.5} vs prevalence {:.5} (rel {:.3}), {}",
        sample.ap,
        pixel.ap,
        prevalence,
        rel,
        secs(took)
    );
    ensure((sample.ap - 0.75).abs() <= 0.03, || detail.clone())?;
    ensure(rel <= 0.15, || detail.clone())?;
    ensure((0.002..=0.004).contains(&prevalence), || format!("prevalence off target: {detail}"))?;
    ensure(took < Duration::from_secs(300), || detail.clone())?;
    Ok(detail)
}

fn locality() -> Outcome {
    let shape = [64usize, 64, 64];
    let params = CorruptionParams::default();
    let mut violations = 0usize;
    let mut changed = 0usize;
    for kind in CorruptionKind::ALL {
        for i in 0..50u64 {
            let s = RngStream::new(11, kind as u64).child(i);
            let volume = random_volume(s.fork(1), shape.to_vec());
            let region = sample_sphere(s.fork(2), &shape, (0.05, 0.3)).unwrap();
            let (out, mask) = apply_corruption(kind, s.fork(3), &volume, &region, &params).unwrap();
            let r2 = region.radius * region.radius;
            let mut off = 0;
            for z in 0..64 {
                for y in 0..64 {
                    for x in 0..64 {
                        let d2: f64 = [z, y, x]
                            .iter()
                            .zip(&region.center)
                            .map(|(&i, c)| (i as f64 + 0.5 - c).powi(2))
                            .sum();
                        let inside = d2 <= r2;
                        let m = mask.values()[off];
                        if m != if inside { 1.0 } else { 0.0 } {
                            violations += 1;
                        }
                        if !inside && out.data()[off].to_bits() != volume.data()[off].to_bits() {
                            violations += 1;
                        }
                        off += 1;
                    }
                }
            }
            changed += (out.data() != volume.data()) as usize;
        }
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok(format!("400 cases, 0 violations, {changed} altered inside the sphere"))
}

fn blend_exactness() -> Outcome {
    let mut rng = RngStream::new(21, 0).rng();
    let mut mismatches = 0usize;
    for case in 0..100u64 {
        let shape = if case % 2 == 0 {
            vec![rng.random_range(16..48), rng.random_range(16..48)]
        } else {
            vec![rng.random_range(8..24), rng.random_range(8..24), rng.random_range(8..24)]
        };
        let s = RngStream::new(21, 1).child(case);
        let a = random_volume(s.fork(1), shape.clone());
        let b = random_volume(s.fork(2), shape.clone());
        let mask: Mask32 = generate_mask(s.fork(3), &PolygonSpec::default(), &shape).unwrap();
        let alpha: f32 = match case {
            0 => 0.05,
            1 => 0.95,
            _ => rng.random_range(0.05..=0.95),
        };
        let out = interpolate_patch(&a, &b, &mask, alpha).unwrap();
        for i in 0..a.len() {
            let expect = if mask.values()[i] > 0.0 {
                (1.0 - alpha) * a.data()[i] + alpha * b.data()[i]
            } else {
                a.data()[i]
            };
            mismatches += (out.data()[i].to_bits() != expect.to_bits()) as usize;
        }
    }
    ensure(mismatches == 0, || format!("{mismatches} voxels differ"))?;
    Ok("100 cases (alpha 0.05 and 0.95 included), bit-exact".into())
}

/// Number of 4-connected components of a 2D support.
fn components_bfs(support: &[bool], h: usize, w: usize) -> usize {
    let mut seen = vec![false; support.len()];
    let mut count = 0;
    for start in 0..support.len() {
        if !support[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            let (r, c) = (p / w, p % w);
            let mut next = Vec::with_capacity(4);
            if r > 0 {
                next.push(p - w);
            }
            if r + 1 < h {
                next.push(p + w);
            }
            if c > 0 {
                next.push(p - 1);
            }
            if c + 1 < w {
                next.push(p + 1);
            }
            for q in next {
                if support[q] && !seen[q] {
                    seen[q] = true;
                    queue.push_back(q);
                }
            }
        }
    }
    count
}

fn pnpoly(c: &ClosedCurve<f64>, px: f64, py: f64) -> bool {
    let p = c.points();
    let mut inside = false;
    let mut j = p.len() - 1;
    for i in 0..p.len() {
        if ((p[i].y > py) != (p[j].y > py)) && (px < (p[j].x - p[i].x) * (py - p[i].y) / (p[j].y - p[i].y) + p[i].x) {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn mask_geometry() -> Outcome {
    let (h, w) = (128usize, 128usize);
    let spec = PolygonSpec::preset(Modality::Brain);
    ensure(spec.vertices == 10 && spec.size_range == (0.10, 0.50), || format!("preset {spec:?}"))?;
    let (lo, hi) = (0.10 * 128.0 - 2.0, 0.50 * 128.0 + 2.0);
    let mut bad = Vec::new();
    let (mut min_side, mut max_side) = (usize::MAX, 0);
    for i in 0..1000u64 {
        let mask: Mask32 = generate_mask(RngStream::new(31, 0).child(i), &spec, &[h, w]).unwrap();
        let support: Vec<bool> = mask.values().iter().map(|&v| v > 0.0).collect();
        let (mut r0, mut r1, mut c0, mut c1) = (h, 0, w, 0);
        for (p, _) in support.iter().enumerate().filter(|(_, s)| **s) {
            r0 = r0.min(p / w);
            r1 = r1.max(p / w);
            c0 = c0.min(p % w);
            c1 = c1.max(p % w);
        }
        let side = (r1 + 1 - r0).max(c1 + 1 - c0);
        min_side = min_side.min(side);
        max_side = max_side.max(side);
        let comps = components_bfs(&support, h, w);
        if !(lo..=hi).contains(&(side as f64)) || comps != 1 {
            bad.push(format!("mask {i}: side {side}, {comps} components"));
        }
    }
    ensure(bad.is_empty(), || format!("{} bad masks, first: {}", bad.len(), bad[0]))?;

    let mut rng = RngStream::new(32, 0).rng();
    let mut disagreements = 0usize;
    for i in 0..100u64 {
        let shape = [rng.random_range(20..90), rng.random_range(20..90)];
        let spec = PolygonSpec {
            vertices: rng.random_range(3..=24),
            size_range: (0.2, 0.9),
            smoothing: Smoothing::None,
            ..PolygonSpec::default()
        };
        let mut curve: ClosedCurve<f64> = sample_polygon(RngStream::new(32, 1).child(i), &spec, &shape).unwrap();
        if i % 4 == 0 {
            curve = smooth_curve(&curve, 8).unwrap();
        }
        let mask = rasterize(&curve, &shape).unwrap();
        for r in 0..shape[0] {
            for c in 0..shape[1] {
                let inside = pnpoly(&curve, c as f64 + 0.5, r as f64 + 0.5);
                disagreements += (inside != (mask.values()[r * shape[1] + c] > 0.0)) as usize;
            }
        }
    }
    ensure(disagreements == 0, || format!("rasterizer disagrees on {disagreements} pixels"))?;
    Ok(format!(
        "1000 masks, long side {min_side}..{max_side} px (allowed {lo}..{hi}), one component each; 100 polygons match point-in-polygon"
    ))
}

fn round_trip_25d() -> Outcome {
    for i in 0..20u64 {
        let s = RngStream::new(41, 0).child(i);
        let v = random_volume(s, vec![32, 32, 32]);
        let mut per_axis = Vec::new();
        for axis in ViewAxis::ALL {
            let mut asm = PlaneAssembler::new(v.shape(), axis).unwrap();
            for stack in iterate_stacks(&v, 3, &[axis]).unwrap() {
                asm.write(stack.index, stack.center()).unwrap();
            }
            let rebuilt = asm.finish("r").unwrap();
            ensure(rebuilt.data() == v.data(), || format!("volume {i} axis {} not reproduced", axis.key()))?;
            per_axis.push(random_volume(s.fork(axis as u64 + 1), vec![32, 32, 32]));
        }
        let fused = fuse_predictions(&per_axis).unwrap();
        for j in 0..fused.len() {
            let mean = per_axis.iter().map(|p| p.data()[j] as f64).sum::<f64>() / 3.0;
            ensure(fused.data()[j] == mean as f32, || format!("volume {i} voxel {j} differs from mean"))?;
        }
        let mut orders = vec![[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        orders.shuffle(&mut s.rng());
        for o in orders {
            let permuted: Vec<Volume32> = o.iter().map(|&k| per_axis[k].clone()).collect();
            ensure(fuse_predictions(&permuted).unwrap().data() == fused.data(), || format!("order {o:?} changes fusion"))?;
        }
    }
    Ok("20 volumes, 3 axes reproduced; fusion equals mean and is order invariant".into())
}

fn autoseg(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_autoseg"))
        .args(args)
        .arg("-q")
        .current_dir(dir)
        .env_remove("AUTOSEG_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn tree_hash(root: &Path) -> BTreeMap<String, String> {
    walkdir::WalkDir::new(root)
        .into_iter()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(root).unwrap().to_string_lossy().into_owned();
            (rel, hex::encode(Sha256::digest(fs::read(e.path()).unwrap())))
        })
        .collect()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    autoseg(d, &["synth", "--out", "vols", "--count", "16", "--shape", "24,24,24", "--seed", "5"])?;
    autoseg(d, &["split", "--manifest", "vols/manifest.json", "--val", "0", "--seed", "5"])?;
    let mut trees = Vec::new();
    for threads in ["1", "8"] {
        let run = format!("run{threads}");
        fs::create_dir_all(d.join(&run)).map_err(|e| e.to_string())?;
        let train = format!("{run}/train");
        let test = format!("{run}/test");
        autoseg(d, &["gen-train", "--manifest", "vols/manifest.json", "--out", &train, "--count", "12", "--stacks", "--seed", "9", "--threads", threads])?;
        autoseg(d, &["gen-test", "--manifest", "vols/manifest.json", "--out", &test, "--radius-range", "0.1,0.25", "--seed", "9", "--threads", threads])?;
        trees.push(tree_hash(&d.join(&run)));
    }
    ensure(trees[0] == trees[1], || {
        let diff = trees[0].iter().filter(|(k, v)| trees[1].get(*k) != Some(v)).count();
        format!("{diff} files differ")
    })?;
    Ok(format!("{} files byte-identical for --threads 1 and 8", trees[0].len()))
}

fn performance() -> Outcome {
    let shape = vec![256usize, 256, 256];
    let volume = random_volume(RngStream::new(51, 0), shape.clone());
    let params = CorruptionParams::default();
    let region = sample_sphere(RngStream::new(51, 1), &shape, (0.25, 0.25)).unwrap();
    let mut slowest = (Duration::ZERO, "");
    for kind in CorruptionKind::ALL {
        let t = Instant::now();
        let out = apply_corruption(kind, RngStream::new(51, 2), &volume, &region, &params).unwrap();
        let took = t.elapsed();
        drop(out);
        if took > slowest.0 {
            slowest = (took, kind.key());
        }
    }
    let t = Instant::now();
    let blurred = autoseg_core::corrupt::filter::gaussian_blur(&volume, 4.0).unwrap();
    let full_blur = t.elapsed();
    drop(blurred);
    let threads = rayon::current_num_threads();
    let detail = format!(
        "slowest corruption {} {}, full-volume blur sigma 4 {}, {threads} thread(s)",
        slowest.1,
        secs(slowest.0),
        secs(full_blur)
    );
    ensure(slowest.0 < Duration::from_secs(5), || detail.clone())?;
    ensure(full_blur < Duration::from_secs(10), || detail.clone())?;
    Ok(detail)
}

fn detector_sanity() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    autoseg(d, &["synth", "--out", "vols", "--count", "40", "--shape", "32,32,32", "--seed", "6"])?;
    autoseg(d, &["split", "--manifest", "vols/manifest.json", "--train", "0.5", "--val", "0", "--seed", "6"])?;
    autoseg(d, &["gen-test", "--manifest", "vols/manifest.json", "--out", "t", "--radius-range", "0.1,0.2", "--kinds", "uniform_addition", "--seed", "6"])?;
    autoseg(d, &["detect-ref", "--corpus", "t", "--out", "p", "--detector", "intensity"])?;
    let json = autoseg(d, &["eval", "--corpus", "t", "--predictions", "p", "--json"])?;
    let rows: Vec<ReportRow> = json.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let pixel = rows
        .iter()
        .find(|r| r.kind == "all" && r.level == "pixel")
        .ok_or("no pooled pixel row")?;
    let ratio = pixel.ap / pixel.prevalence;
    let detail = format!("pixel AP {:.4}, prevalence {:.4}, ratio {:.1}", pixel.ap, pixel.prevalence, ratio);
    ensure(ratio >= 5.0, || detail.clone())?;
    Ok(detail)
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Outcome); 9] = [
        ("ap-oracle-equivalence", ap_oracle),
        ("random-baseline", random_baseline),
        ("corruption-locality", locality),
        ("blend-exactness", blend_exactness),
        ("mask-geometry", mask_geometry),
        ("planes-round-trip", round_trip_25d),
        ("determinism", determinism),
        ("performance-budget", performance),
        ("reference-detector", detector_sanity),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let (mut run, mut failed) = (0, 0);
    for (name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        run += 1;
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", run - failed);
    let strict = std::env::var("AUTOSEG_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if failed == 0 || !strict {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
