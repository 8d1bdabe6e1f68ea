//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#![allow(clippy::type_complexity)]

use std::collections::{BTreeMap, HashMap};
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::{Isometry3, Translation3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oel3d::descriptors::{compute_good, compute_good_with, GOOD_EPSILON, compute_spin_image, project_counts, ProjectionPlane, SpinParams};
use oel3d::evaluation::{
    kfold, metrics, pick_rho, replay_accuracy, run_context_protocol, run_protocol, Action, ConfusionMatrix, Context,
    Learner, ProtocolLog, ProtocolParams, Termination,
};
use oel3d::learning::{
    bayes_classify, bayes_teach, icd, mean_icd, nocd_approach1, nocd_approach2, set_distance, BayesMemory,
    InstanceCategory, Representation,
};
use oel3d::nbv::{render_indices, sample_view_index, viewpoint_entropy, CameraPose, RenderParams, SegmentedScene};
use oel3d::pipeline::{fold_runner, prepare_dataset, LearnerKind, PipelineConfig, RepresentationKind};
use oel3d::pointcloud::{voxel_downsample, Point3, PointCloud, Vector3, DEFAULT_SIGN_THRESHOLD};
use oel3d::representations::{lda_infer, lda_update, local_lda_update, phi, LdaParams, TopicModel, TopicScope};
use oel3d::segmentation::{detect_candidates, DetectionParams};
use oel3d::synthgen::{
    default_families, generate_dataset, generate_scene, generate_view, random_rotation, SceneLabel, ShapeKind,
    ShapeSpec, TableSpec,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("runtime {t:.2?} exceeds {limit:?}"))?;
    Ok(t)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Box with an off-center sphere: no symmetry plane, distinct principal axes.
fn anisotropic_object() -> PointCloud {
    let mut body = ShapeSpec::new(ShapeKind::Box, [0.14, 0.08, 0.05], 900);
    body.seed = 1;
    let mut knob = ShapeSpec::new(ShapeKind::Sphere, [0.02, 0.0, 0.0], 300);
    knob.pose = Isometry3::translation(0.05, 0.03, 0.03);
    knob.seed = 2;
    let mut cloud = generate_view(&body).unwrap();
    cloud.extend(&generate_view(&knob).unwrap());
    cloud
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let cloud = anisotropic_object();
    let reference = compute_good(&cloud, 15).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut min_cos, mut identical) = (f64::INFINITY, 0);
    for _ in 0..100 {
        let rot = random_rotation(&mut rng);
        let t = Vector3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let moved = cloud.transformed(rot.to_rotation_matrix().matrix(), &t);
        let d = compute_good(&moved, 15).map_err(|e| e.to_string())?;
        min_cos = min_cos.min(cosine(&reference.bins, &d.bins));
        if d.bins == reference.bins {
            identical += 1;
        }
    }
    ensure(min_cos >= 0.99, || format!("min cosine {min_cos:.4} < 0.99"))?;
    ensure(identical >= 95, || format!("only {identical}/100 bit-identical"))?;
    let mut max_dev: f64 = 0.0;
    // Both length constants (sign dead band and bin widening) scale with the cloud.
    for s in [0.25, 0.5, 2.0, 3.7, 10.0] {
        let scaled: PointCloud = cloud.points().iter().map(|p| Point3::from(p.coords * s)).collect();
        let d = compute_good_with(&scaled, 15, DEFAULT_SIGN_THRESHOLD * s, GOOD_EPSILON * s).map_err(|e| e.to_string())?;
        max_dev = reference.bins.iter().zip(&d.bins).map(|(a, b)| (a - b).abs()).fold(max_dev, f64::max);
    }
    let mut doubled = cloud.clone();
    doubled.extend(&cloud);
    let d = compute_good(&doubled, 15).map_err(|e| e.to_string())?;
    max_dev = reference.bins.iter().zip(&d.bins).map(|(a, b)| (a - b).abs()).fold(max_dev, f64::max);
    ensure(max_dev <= 1e-9, || format!("scale/duplication deviation {max_dev:e}"))?;
    let t = within(Duration::from_secs(10), start)?;
    Ok(format!(
        "min cosine {min_cos:.6}, {identical}/100 bit-identical, scale/dup deviation {max_dev:e}, {t:.2?}"
    ))
}

fn criterion_2() -> Outcome {
    let cloud = anisotropic_object();
    let mut lens = Vec::new();
    for (n, want) in [(5, 75), (15, 675)] {
        let len = compute_good(&cloud, n).map_err(|e| e.to_string())?.len();
        ensure(len == want, || format!("n = {n}: length {len}, expected {want}"))?;
        lens.push(len);
    }
    Ok(format!("lengths {lens:?}"))
}

fn cv_accuracy(data: &[(String, Vec<PointCloud>)], cfg: PipelineConfig) -> Result<f64, String> {
    let (views, _) = prepare_dataset(data, &cfg).map_err(|e| e.to_string())?;
    let cm = kfold(&views, 10, 7, fold_runner(cfg)).map_err(|e| e.to_string())?;
    Ok(metrics(&cm).map_err(|e| e.to_string())?.accuracy)
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let families = default_families();
    ensure(families.iter().all(|f| f.noise_sigma == 0.002), || "families must use 2 mm noise".into())?;
    let data = generate_dataset(&families, 40, 3).map_err(|e| e.to_string())?.categories;
    let good = cv_accuracy(
        &data,
        PipelineConfig {
            representation: RepresentationKind::Good,
            learner: LearnerKind::Instance,
            good_bins: 15,
            ..Default::default()
        },
    )?;
    let bow = cv_accuracy(
        &data,
        PipelineConfig {
            representation: RepresentationKind::Bow,
            learner: LearnerKind::Bayes,
            dictionary_size: 90,
            ..Default::default()
        },
    )?;
    ensure(good >= 0.90, || format!("GOOD + 1-NN accuracy {good:.3} < 0.90"))?;
    ensure(bow >= 0.80, || format!("BoW + naive Bayes accuracy {bow:.3} < 0.80"))?;
    let t = within(Duration::from_secs(120), start)?;
    Ok(format!("GOOD+1-NN {good:.3}, BoW(90)+NB {bow:.3}, {t:.2?}"))
}

fn oracle_set_distance(u: &[Vec<f64>], v: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for a in u {
        let mut best = f64::INFINITY;
        for b in v {
            let d = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            if d < best {
                best = d;
            }
        }
        total += best;
    }
    total / u.len() as f64
}

fn oracle_icd(sets: &[Vec<Vec<f64>>]) -> f64 {
    let n = sets.len();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += oracle_set_distance(&sets[i], &sets[j]);
            }
        }
    }
    sum / (n * (n - 1)) as f64
}

fn random_set(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Vec<f64>> {
    let n = rng.random_range(1..=20);
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(0.0..5.0)).collect()).collect()
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, extent: f64) -> Vec<Point3> {
    (0..n)
        .map(|_| {
            Point3::new(
                rng.random_range(-extent..extent),
                rng.random_range(-extent..extent),
                rng.random_range(-extent..extent),
            )
        })
        .collect()
}

fn oracle_clusters(points: &[Point3], link: f64, min_pts: usize, max_pts: usize) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (points[i] - points[j]).norm() < link {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups
        .into_values()
        .filter(|g| g.len() >= min_pts && g.len() <= max_pts)
        .collect();
    out.sort();
    out
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let trials = 60;
    let mut worst: f64 = 0.0;

    // set distance, ICD, NOCD I/II
    for _ in 0..trials {
        let dim = rng.random_range(1..6);
        let (u, v) = (random_set(&mut rng, dim), random_set(&mut rng, dim));
        let got = set_distance(&u, &v).map_err(|e| e.to_string())?;
        worst = worst.max((got - oracle_set_distance(&u, &v)).abs());

        let mut cats = Vec::new();
        let mut raw = Vec::new();
        for c in 0..3 {
            let k = rng.random_range(2..=5);
            let sets: Vec<Vec<Vec<f64>>> = (0..k).map(|_| random_set(&mut rng, dim)).collect();
            let mut cat = InstanceCategory::new(format!("c{c}"));
            for s in &sets {
                cat.add(Representation::FeatureSet(s.clone())).map_err(|e| e.to_string())?;
            }
            worst = worst.max((icd(&cat).map_err(|e| e.to_string())? - oracle_icd(&sets)).abs());
            cats.push(cat);
            raw.push(sets);
        }
        let t = random_set(&mut rng, dim);
        let bar: f64 = raw.iter().map(|s| oracle_icd(s)).sum::<f64>() / 3.0;
        worst = worst.max((mean_icd(&cats).map_err(|e| e.to_string())? - bar).abs());
        for (cat, sets) in cats.iter().zip(&raw) {
            let ds: Vec<f64> = sets.iter().map(|o| oracle_set_distance(&t, o)).collect();
            let a1 = ds.iter().cloned().fold(f64::INFINITY, f64::min) / oracle_icd(sets);
            let a2 = 2.0 * (ds.iter().sum::<f64>() / ds.len() as f64) / (oracle_icd(sets) + bar);
            worst = worst.max((nocd_approach1(&t, cat).map_err(|e| e.to_string())? - a1).abs());
            worst = worst.max((nocd_approach2(&t, cat, bar).map_err(|e| e.to_string())? - a2).abs());
        }
    }
    ensure(worst <= 1e-9, || format!("distance oracles deviate by {worst:e}"))?;

    // euclidean clustering
    for trial in 0..trials {
        let count = rng.random_range(5..80);
        let pts = random_points(&mut rng, count, 0.15);
        let cloud = PointCloud::new(pts.clone());
        let (min_pts, max_pts) = (rng.random_range(1..4), rng.random_range(10..80));
        let mut got = oel3d::segmentation::cluster_indices(&cloud, 0.05, min_pts, max_pts).map_err(|e| e.to_string())?;
        got.sort();
        let want = oracle_clusters(&pts, 0.05, min_pts, max_pts);
        ensure(got == want, || format!("clustering trial {trial} differs from union-find oracle"))?;
        let clouds = oel3d::segmentation::euclidean_cluster(&cloud, 0.05, min_pts, max_pts).map_err(|e| e.to_string())?;
        ensure(clouds.len() == want.len(), || "euclidean_cluster count differs".into())?;
    }

    // voxel downsampling
    for trial in 0..trials {
        let count = rng.random_range(1..200);
        let pts = random_points(&mut rng, count, 0.1);
        let voxel = rng.random_range(0.01..0.05);
        let got = voxel_downsample(&PointCloud::new(pts.clone()), voxel).map_err(|e| e.to_string())?;
        let min = pts.iter().fold(Vector3::repeat(f64::INFINITY), |m, p| m.inf(&p.coords));
        let mut buckets: BTreeMap<[i64; 3], Vec<Point3>> = BTreeMap::new();
        for p in &pts {
            let key = [0, 1, 2].map(|k| ((p[k] - min[k]) / voxel).floor() as i64);
            buckets.entry(key).or_default().push(*p);
        }
        let mut want: Vec<Point3> = buckets
            .values()
            .map(|b| Point3::from(b.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / b.len() as f64))
            .collect();
        let mut got: Vec<Point3> = got.points().to_vec();
        let key = |p: &Point3| [0, 1, 2].map(|k| ((p[k] - min[k]) / voxel).floor() as i64);
        want.sort_by_key(key);
        got.sort_by_key(key);
        ensure(got.len() == want.len(), || format!("voxel trial {trial}: {} vs {} points", got.len(), want.len()))?;
        for (a, b) in got.iter().zip(&want) {
            worst = worst.max((a - b).norm());
        }
    }
    ensure(worst <= 1e-9, || format!("voxel centroids deviate by {worst:e}"))?;

    // spin images
    for trial in 0..trials {
        let params = SpinParams {
            voxel: 0.01,
            image_width: rng.random_range(2..7),
            support_length: rng.random_range(0.02..0.06),
            support_angle: rng.random_range(30.0..150.0),
        };
        let pts = random_points(&mut rng, 50, 0.06);
        let normals: Vec<Vector3> = (0..50)
            .map(|_| Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).normalize())
            .collect();
        let kp = pts[0];
        let n = normals[0];
        let cloud = PointCloud::new(pts.clone());
        let img = compute_spin_image(&cloud, &normals, &kp, &n, &params).map_err(|e| e.to_string())?;
        let (iw, sl) = (params.image_width, params.support_length);
        let mut want = vec![0.0; (iw + 1) * (2 * iw + 1)];
        for (x, nx) in pts.iter().zip(&normals) {
            let angle = nx.dot(&n).clamp(-1.0, 1.0).acos().to_degrees();
            if angle > params.support_angle {
                continue;
            }
            let d = x - kp;
            let beta = n.dot(&d);
            let alpha = (d.norm_squared() - beta * beta).max(0.0).sqrt();
            if alpha > sl || beta.abs() > sl {
                continue;
            }
            let row = ((alpha * iw as f64 / sl).floor() as usize).min(iw);
            let col = (((beta + sl) * iw as f64 / sl).floor() as usize).min(2 * iw);
            want[row * (2 * iw + 1) + col] += 1.0;
        }
        ensure(img.histogram == want, || format!("spin image trial {trial} differs from binning oracle"))?;
    }

    // GOOD binning
    for trial in 0..trials {
        let count = rng.random_range(1..150);
        let pts = random_points(&mut rng, count, 0.2);
        let reach = pts.iter().flat_map(|p| p.iter().map(|v| v.abs())).fold(0.0, f64::max);
        let l = 2.0 * reach * rng.random_range(1.0..1.5);
        let n = rng.random_range(2..16);
        let cloud = PointCloud::new(pts.clone());
        for plane in [ProjectionPlane::XoZ, ProjectionPlane::XoY, ProjectionPlane::YoZ] {
            let got = project_counts(&cloud, plane, l, n).map_err(|e| e.to_string())?;
            let mut want = vec![0u64; n * n];
            for p in &pts {
                let (a, b) = match plane {
                    ProjectionPlane::XoZ => (p.x, p.z),
                    ProjectionPlane::XoY => (p.x, p.y),
                    ProjectionPlane::YoZ => (p.y, p.z),
                };
                let r = (n as f64 * (a + l / 2.0) / (l + 1e-6)).floor() as usize;
                let c = (n as f64 * (b + l / 2.0) / (l + 1e-6)).floor() as usize;
                want[r * n + c] += 1;
            }
            ensure(got == want, || format!("GOOD binning trial {trial} ({plane:?}) differs from floor oracle"))?;
        }
    }
    Ok(format!("{trials} randomized instances per oracle, max real deviation {worst:e}"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let events: Vec<(String, Vec<u64>)> = (0..6)
        .map(|i| (format!("c{}", i % 3), (0..8).map(|_| rng.random_range(0..12)).collect()))
        .collect();
    let probes: Vec<Vec<u64>> = (0..100).map(|_| (0..8).map(|_| rng.random_range(0..12)).collect()).collect();
    let teach = |order: &[(String, Vec<u64>)]| -> Result<BayesMemory, String> {
        let mut m = BayesMemory::new();
        for (l, x) in order {
            bayes_teach(&mut m, l, x).map_err(|e| e.to_string())?;
        }
        Ok(m)
    };
    let predict = |m: &BayesMemory| -> Result<Vec<Option<String>>, String> {
        probes.iter().map(|y| bayes_classify(m, y).map(|p| p.label).map_err(|e| e.to_string())).collect()
    };
    let reference = teach(&events)?;
    let ref_preds = predict(&reference)?;
    for perm in 0..20 {
        let mut order = events.clone();
        order.shuffle(&mut rng);
        let m = teach(&order)?;
        for (label, cat) in &reference.categories {
            ensure(m.categories[label].accumulator == cat.accumulator && m.categories[label].n_k == cat.n_k, || {
                format!("permutation {perm}: accumulator of {label} differs")
            })?;
        }
        ensure(m == reference, || format!("permutation {perm}: memory differs"))?;
        ensure(predict(&m)? == ref_preds, || format!("permutation {perm}: predictions differ"))?;
    }
    Ok("20 permutations, identical accumulators and 100 probe predictions".into())
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (v, k) = (12, 4);
    let mut model = TopicModel::new(TopicScope::Shared, v, k, 1.0, 0.1, 9).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for step in 0..40 {
        let doc: Vec<usize> = (0..rng.random_range(0..30)).map(|_| rng.random_range(0..v)).collect();
        lda_update(&mut model, &doc, 10).map_err(|e| e.to_string())?;
        ensure(model.is_consistent(), || format!("update {step}: n_k inconsistent"))?;
        for kk in 0..k {
            let col: f64 = phi(&model).iter().map(|row| row[kk]).sum();
            worst = worst.max((col - 1.0).abs());
        }
        let before = model.clone();
        let probe: Vec<usize> = (0..rng.random_range(0..30)).map(|_| rng.random_range(0..v)).collect();
        let theta = lda_infer(&model, &probe, 10, step).map_err(|e| e.to_string())?.theta;
        worst = worst.max((theta.iter().sum::<f64>() - 1.0).abs());
        ensure(model == before, || format!("update {step}: lda_infer mutated the model"))?;
    }
    ensure(worst <= 1e-9, || format!("normalization error {worst:e}"))?;

    // local LDA isolation
    let params = LdaParams {
        topics: 3,
        iters: 5,
        ..LdaParams::new(v)
    };
    let mut models = BTreeMap::new();
    for c in ["a", "b", "c"] {
        local_lda_update(&mut models, &params, c, &[0, 1, 2]).map_err(|e| e.to_string())?;
    }
    for step in 0..30 {
        let target = ["a", "b", "c"][step % 3];
        let others: Vec<(String, TopicModel)> =
            models.iter().filter(|(n, _)| *n != target).map(|(n, m)| (n.clone(), m.clone())).collect();
        let doc: Vec<usize> = (0..rng.random_range(1..20)).map(|_| rng.random_range(0..v)).collect();
        local_lda_update(&mut models, &params, target, &doc).map_err(|e| e.to_string())?;
        for (n, m) in others {
            ensure(models[&n] == m, || format!("updating {target} changed {n}"))?;
        }
    }

    // two-topic separation: two-word vocabulary, disjoint docs, K = 2, 200 sweeps
    let mut separated = 0;
    for seed in 0..10 {
        let mut m = TopicModel::new(TopicScope::Shared, 2, 2, 0.1, 0.1, seed).map_err(|e| e.to_string())?;
        lda_update(&mut m, &[0; 50], 200).map_err(|e| e.to_string())?;
        lda_update(&mut m, &[1; 50], 200).map_err(|e| e.to_string())?;
        let concentrated = (0..2).all(|kk| {
            let total = m.n_k[kk] as f64;
            total > 0.0 && (0..2).any(|w| m.count(w, kk) as f64 / total > 0.8)
        });
        if concentrated {
            separated += 1;
        }
    }
    ensure(separated >= 9, || format!("separation in only {separated}/10 seeds"))?;
    Ok(format!("normalization error {worst:e}, isolation exact, separation {separated}/10 seeds"))
}

/// Views are their own true labels.
struct Scripted {
    right: bool,
}

impl Learner<String> for Scripted {
    fn teach(&mut self, _label: &str, _view: &String) -> oel3d::Result<()> {
        Ok(())
    }
    fn predict(&mut self, view: &String) -> oel3d::Result<Option<String>> {
        Ok(Some(if self.right { view.clone() } else { format!("not-{view}") }))
    }
}

fn label_dataset(cats: usize, views: usize) -> Vec<(String, Vec<String>)> {
    (0..cats)
        .map(|c| {
            let l = format!("cat{c}");
            (l.clone(), vec![l; views])
        })
        .collect()
}

fn replay_matches(log: &ProtocolLog) -> bool {
    let logged: Vec<f64> = log.events.iter().filter(|e| e.action == Action::Ask).filter_map(|e| e.accuracy).collect();
    let asks = log.events.iter().filter(|e| e.action == Action::Ask).count();
    logged.len() == asks && replay_accuracy(&log.events, log.params.window_mult) == logged
}

fn criterion_7() -> Outcome {
    let p = ProtocolParams::default();
    ensure(p.tau == 0.67 && p.views_per_teach == 3 && p.window_mult == 3 && p.breakpoint_limit == 100, || {
        format!("defaults differ: {p:?}")
    })?;
    let (log, s) = run_protocol(&label_dataset(5, 30), &mut Scripted { right: true }, p).map_err(|e| e.to_string())?;
    ensure(s.termination == Termination::LackOfData && s.nlc == 5 && s.gca == 1.0, || {
        format!("perfect learner: {:?}, NLC {}, GCA {}", s.termination, s.nlc, s.gca)
    })?;
    ensure(replay_matches(&log), || "perfect learner: replayed s differs from log".into())?;
    let taught = log.events.iter().filter(|e| e.action == Action::Teach).count();
    ensure(taught == 3 * log.introductions.len(), || {
        format!("{taught} teach events for {} introductions", log.introductions.len())
    })?;

    let (log, s) = run_protocol(&label_dataset(5, 60), &mut Scripted { right: false }, p).map_err(|e| e.to_string())?;
    let second = log.introductions.get(1).ok_or("always-wrong learner never introduced category 2")?;
    let asks_after = s.qci - second.iteration;
    ensure(s.termination == Termination::Breakpoint && asks_after == 100 && s.nlc == 1, || {
        format!("always-wrong: {:?} after {asks_after} asks, NLC {}", s.termination, s.nlc)
    })?;
    ensure(replay_matches(&log), || "always-wrong learner: replayed s differs from log".into())?;

    // mixed learner: replay must also hold when windows slide
    struct Flaky(u64);
    impl Learner<String> for Flaky {
        fn teach(&mut self, _: &str, _: &String) -> oel3d::Result<()> {
            Ok(())
        }
        fn predict(&mut self, view: &String) -> oel3d::Result<Option<String>> {
            self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            Ok(((self.0 >> 33) % 10 < 8).then(|| view.clone()))
        }
    }
    let (log, _) = run_protocol(&label_dataset(8, 40), &mut Flaky(3), ProtocolParams { seed: 5, ..p })
        .map_err(|e| e.to_string())?;
    ensure(replay_matches(&log), || "flaky learner: replayed s differs from log".into())?;
    Ok(format!("perfect NLC 5 / GCA 1.0 / lack_of_data; always-wrong breakpoint after {asks_after} asks; replay exact"))
}

fn criterion_8() -> Outcome {
    let data = label_dataset(8, 30);
    let contexts: BTreeMap<String, Context> = data
        .iter()
        .enumerate()
        .map(|(i, (l, _))| (l.clone(), if i % 2 == 0 { Context::A } else { Context::B }))
        .collect();
    // ALC from a prior no-context run over the context-A categories
    let a_only: Vec<(String, Vec<String>)> =
        data.iter().filter(|(l, _)| contexts[l] == Context::A).cloned().collect();
    let (_, prior) = run_protocol(&a_only, &mut Scripted { right: true }, ProtocolParams::default())
        .map_err(|e| e.to_string())?;
    let rho = pick_rho(prior.nlc as f64, 8).map_err(|e| e.to_string())?;
    let (log, s) = run_context_protocol(&data, &contexts, &mut Scripted { right: true }, rho, ProtocolParams::default())
        .map_err(|e| e.to_string())?;
    let learned_in = |c: Context| {
        log.learned
            .iter()
            .filter(|l| log.introductions.iter().any(|i| &i.category == *l && i.context == Some(c)))
            .count()
    };
    let (alc1, alc2) = (learned_in(Context::A), learned_in(Context::B));
    let expected_alc1 = (rho + 1).min(4);
    ensure(s.alc1 == Some(expected_alc1) && s.alc2 == Some(8 - expected_alc1), || {
        format!("rho {rho}: ALC1 {:?}, ALC2 {:?}, expected {expected_alc1} / {}", s.alc1, s.alc2, 8 - expected_alc1)
    })?;
    ensure(s.alc1 == Some(alc1) && s.alc2 == Some(alc2), || "summary ALC differs from log".into())?;
    let ratio = alc2 as f64 / alc1 as f64;
    // lack_of_data: adaptability is undefined
    ensure(s.termination == Termination::LackOfData && s.adaptability.is_none(), || {
        format!("perfect run: {:?}, adaptability {:?}", s.termination, s.adaptability)
    })?;

    // a learner that never recognizes two B categories ends at breakpoint
    let stall: Vec<String> =
        data.iter().filter(|(l, _)| contexts[l] == Context::B).take(2).map(|(l, _)| l.clone()).collect();
    struct Staller(Vec<String>);
    impl Learner<String> for Staller {
        fn teach(&mut self, _: &str, _: &String) -> oel3d::Result<()> {
            Ok(())
        }
        fn predict(&mut self, view: &String) -> oel3d::Result<Option<String>> {
            Ok((!self.0.contains(view)).then(|| view.clone()))
        }
    }
    let data_long = label_dataset(8, 200);
    let (blog, bs) = run_context_protocol(&data_long, &contexts, &mut Staller(stall), 2, ProtocolParams::default())
        .map_err(|e| e.to_string())?;
    let b1 = blog.learned.iter().filter(|l| contexts[*l] == Context::A).count();
    let b2 = blog.learned.iter().filter(|l| contexts[*l] == Context::B).count();
    ensure(
        bs.termination == Termination::Breakpoint && bs.adaptability == Some(b2 as f64 / b1 as f64),
        || format!("stalling run: {:?}, adaptability {:?} vs log {b2}/{b1}", bs.termination, bs.adaptability),
    )?;

    // rho sampling over 10^4 draws
    let alc = 20.0;
    let mut hist: HashMap<usize, usize> = HashMap::new();
    for seed in 0..10_000 {
        let r = pick_rho(alc, seed).map_err(|e| e.to_string())?;
        ensure((13..=17).contains(&r), || format!("rho {r} outside [13, 17]"))?;
        *hist.entry(r).or_default() += 1;
    }
    let spread = hist.values().map(|&c| (c as f64 / 1e4 - 0.2).abs()).fold(0.0, f64::max);
    ensure(hist.len() == 5 && spread <= 0.03, || format!("rho histogram not uniform: {hist:?}"))?;
    Ok(format!(
        "rho {rho}: ALC1 {alc1}, ALC2 {alc2}, log ratio {ratio:.3}; breakpoint run adaptability {:.3}; rho in [13,17] over 10^4 draws",
        bs.adaptability.unwrap()
    ))
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let objects: Vec<ShapeSpec> = [(-0.3, 0.1), (0.0, -0.1), (0.3, 0.15)]
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            let mut s = ShapeSpec::new(ShapeKind::Box, [0.06 + 0.01 * i as f64, 0.05, 0.08], 800);
            s.pose = Isometry3::from_parts(Translation3::new(x, y, 0.0), nalgebra::UnitQuaternion::from_euler_angles(0.0, 0.0, 0.4 * i as f64));
            s.noise_sigma = 0.002;
            s.seed = 90 + i as u64;
            s
        })
        .collect();
    let scene = generate_scene(&objects, &TableSpec::default(), 150, 0.01, 9).map_err(|e| e.to_string())?;
    let params = DetectionParams {
        plane_tau: 0.02,
        plane_iterations: 200,
        ..Default::default()
    };
    let (plane, candidates) = detect_candidates(&scene.cloud, &params).map_err(|e| e.to_string())?;
    let angle = plane.normal.dot(&Vector3::z()).abs().min(1.0).acos().to_degrees();
    ensure(angle <= 2.0, || format!("plane normal off by {angle:.2} degrees"))?;
    ensure(candidates.len() == 3, || format!("{} candidates instead of 3", candidates.len()))?;
    let mut purities = Vec::new();
    for c in &candidates {
        let mut per: HashMap<usize, usize> = HashMap::new();
        for &i in &c.scene_indices {
            if let SceneLabel::Object(k) = scene.labels[i] {
                *per.entry(k).or_default() += 1;
            }
        }
        let best = per.values().copied().max().unwrap_or(0);
        purities.push(best as f64 / c.scene_indices.len() as f64);
    }
    ensure(purities.iter().all(|&p| p >= 0.95), || format!("cluster purities {purities:?}"))?;
    let t = within(Duration::from_secs(5), start)?;
    Ok(format!("normal off by {angle:.3} deg, 3 candidates, min purity {:.3}, {t:.2?}", purities.iter().cloned().fold(1.0, f64::min)))
}

fn criterion_10() -> Outcome {
    let blob = |n: usize| PointCloud::new(vec![Point3::origin(); n]);
    let h1 = viewpoint_entropy(&SegmentedScene::from_clusters(vec![blob(40)]).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure(h1 == 0.0, || format!("single-cluster entropy {h1}"))?;
    for k in [2usize, 3, 5, 8] {
        let h = viewpoint_entropy(&SegmentedScene::from_clusters((0..k).map(|_| blob(25)).collect()).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        ensure((h - (k as f64).ln()).abs() < 1e-12, || format!("K = {k}: entropy {h} vs ln K"))?;
    }

    // occluding plate between the camera and a small box
    let mut pts = Vec::new();
    for i in 0..=120 {
        for j in 0..=120 {
            pts.push(Point3::new(-0.3 + i as f64 * 0.005, -0.3 + j as f64 * 0.005, 1.0));
        }
    }
    let plate = pts.len();
    let mut bx = ShapeSpec::new(ShapeKind::Box, [0.1, 0.1, 0.1], 500);
    bx.pose = Isometry3::translation(0.0, 0.0, 0.3);
    pts.extend(generate_view(&bx).map_err(|e| e.to_string())?.points().iter().copied());
    let world = PointCloud::new(pts);
    let above = CameraPose::look_at(Point3::new(0.0, 0.0, 2.0), Point3::origin(), Vector3::y()).map_err(|e| e.to_string())?;
    let seen = render_indices(&world, &above, &RenderParams::default()).map_err(|e| e.to_string())?;
    ensure(seen.iter().all(|&i| i < plate), || "hidden box points rendered".into())?;
    let below = CameraPose::look_at(Point3::new(0.0, 0.0, -1.0), Point3::origin(), Vector3::y()).map_err(|e| e.to_string())?;
    let seen_below = render_indices(&world, &below, &RenderParams::default()).map_err(|e| e.to_string())?;
    ensure(seen_below.iter().any(|&i| i >= plate), || "box invisible from the open side".into())?;

    // selection frequencies
    let weights = [0.9, 0.3, 0.6, 0.2];
    let total: f64 = weights.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut hits = [0usize; 4];
    for _ in 0..10_000 {
        hits[sample_view_index(&weights, &mut rng).map_err(|e| e.to_string())?] += 1;
    }
    let dev = hits
        .iter()
        .zip(&weights)
        .map(|(&h, w)| (h as f64 / 1e4 - w / total).abs())
        .fold(0.0, f64::max);
    ensure(dev <= 0.02, || format!("selection frequency off by {dev:.4}"))?;
    Ok(format!("closed forms exact, occlusion respected, max frequency deviation {dev:.4}"))
}

fn criterion_11() -> Outcome {
    let labels = |n: usize| (0..n).map(|i| format!("c{i}")).collect::<Vec<_>>();
    let cm2 = ConfusionMatrix::from_counts(labels(2), vec![vec![5, 1], vec![2, 4]]).map_err(|e| e.to_string())?;
    let m2 = metrics(&cm2).map_err(|e| e.to_string())?;
    let want2 = [0.75, 0.75, (5.0 / 7.0 + 4.0 / 5.0) / 2.0, 0.75, (5.0 / 6.0 + 4.0 / 6.0) / 2.0];
    let cm3 = ConfusionMatrix::from_counts(labels(3), vec![vec![5, 1, 0], vec![2, 3, 1], vec![0, 2, 6]])
        .map_err(|e| e.to_string())?;
    let m3 = metrics(&cm3).map_err(|e| e.to_string())?;
    let want3 = [0.7, 0.7, (5.0 / 7.0 + 3.0 / 6.0 + 6.0 / 7.0) / 3.0, 0.7, (5.0 / 6.0 + 3.0 / 6.0 + 6.0 / 8.0) / 3.0];
    for (m, want) in [(&m2, want2), (&m3, want3)] {
        let got = [m.accuracy, m.precision_micro, m.precision_macro, m.recall_micro, m.recall_macro];
        for (g, w) in got.iter().zip(want) {
            ensure((g - w).abs() <= 1e-12, || format!("metric {g} vs hand value {w}"))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = rng.random_range(2..7);
        let counts: Vec<Vec<u64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(0..9)).collect()).collect();
        if counts.iter().flatten().sum::<u64>() == 0 {
            continue;
        }
        let m = metrics(&ConfusionMatrix::from_counts(labels(n), counts).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        ensure(m.precision_micro == m.accuracy && m.recall_micro == m.accuracy, || {
            "micro precision/recall differ from accuracy".into()
        })?;
    }
    Ok("2x2 and 3x3 hand values to 1e-12, micro = accuracy on 50 random matrices".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("GOOD invariances", criterion_1),
        ("GOOD descriptor length", criterion_2),
        ("desk-scale recognition", criterion_3),
        ("oracle equivalence", criterion_4),
        ("naive-Bayes order invariance", criterion_5),
        ("LDA contracts", criterion_6),
        ("protocol fidelity", criterion_7),
        ("context protocol", criterion_8),
        ("segmentation", criterion_9),
        ("next-best-view", criterion_10),
        ("metrics", criterion_11),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    panic::set_hook(Box::new(|_| {}));
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| id.ends_with(f.as_str()) || name.contains(f.as_str())) {
            continue;
        }
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("{id} ({name}): PASS - {detail}"),
            Err(why) => {
                failed += 1;
                println!("{id} ({name}): FAIL - {why}");
            }
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
