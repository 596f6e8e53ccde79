//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.
//!
//! Run with `cargo test -p semtrans-cli --test acceptance`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use semtrans_cli::commands::sweep::{sweep, SweepParam, SweepSpec};
use semtrans_cli::{Manifest, RunConfig, Session};
use semtrans_core::backends::{
    AugmentationSpec, Backends, EnsembleEmbedder, EnsembleMember, IdentityAutoencoder, ImageEmbedder,
    LinearImageEmbedder, PyramidDistance, SurrogateConfig, TextEncoder,
};
use semtrans_core::dataset::{ClusterRegistry, ImageIndex, QuerySet, RegistryCounts, Split};
use semtrans_core::metrics::{csfid, sfid, FeatureExtractor, FeatureSet, MetricReport, ProjectionExtractor};
use semtrans_core::optimizer::{fgm_step, optimize, prepare, total_loss, total_loss_and_grad};
use semtrans_core::{HyperParams, Image, LatentCode, LatentNorm, TransformQuery};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

/// Shared synthetic corpus for the shipped registry.
struct Corpus {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Corpus {
    fn index(&self) -> PathBuf {
        self.root.join("index.json")
    }
}

fn semtrans(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_semtrans"))
        .args(args)
        .env_remove(semtrans_cli::CONFIG_ENV)
        .output()
        .map_err(|e| format!("spawn: {e}"))?;
    if !out.status.success() {
        return Err(format!(
            "`semtrans {}` exited with {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

// 1 ---------------------------------------------------------------------------

fn gaussian_rows(rng: &mut ChaCha8Rng, n: usize, d: usize, shift: f64, spread: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|j| shift + 0.05 * j as f64 + spread * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

fn two_pass_stats(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for j in 0..d {
            mean[j] += r[j];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for r in rows {
        for j in 0..d {
            var[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
        }
    }
    (mean, var.iter().map(|v| (v / n).sqrt()).collect())
}

fn oracle_sfid(real: &[Vec<f64>], synth: &[Vec<f64>], alpha: f64) -> f64 {
    let (mr, sr) = two_pass_stats(real);
    let (ms, ss) = two_pass_stats(synth);
    let mut mean_term = 0.0;
    let mut std_term = 0.0;
    for j in 0..mr.len() {
        mean_term += (mr[j] - ms[j]).powi(2);
        std_term += (sr[j] - ss[j]).powi(2);
    }
    mean_term + alpha * std_term
}

fn metric_oracles(_: &Corpus) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let real = gaussian_rows(&mut rng, 1000, 16, 0.0, 1.0);
    let synth = gaussian_rows(&mut rng, 1000, 16, 0.2, 1.3);
    let r = FeatureSet::from_rows(&real, None).map_err(|e| e.to_string())?;
    let s = FeatureSet::from_rows(&synth, None).map_err(|e| e.to_string())?;
    let mut worst_sfid = 0.0f64;
    for alpha in [0.0, 1.0] {
        let ours = sfid(&r, &s, alpha).map_err(|e| e.to_string())?;
        worst_sfid = worst_sfid.max(rel_err(ours, oracle_sfid(&real, &synth, alpha)));
    }
    ensure!(worst_sfid <= 1e-9, "sfid relative error {worst_sfid:e}");

    let labels = ["goldfish", "tench", "magpie", "jay", "robin"];
    let (mut rr, mut rl, mut sr, mut sl) = (vec![], vec![], vec![], vec![]);
    for (k, l) in labels.iter().enumerate() {
        for row in gaussian_rows(&mut rng, 150 + 20 * k, 16, k as f64, 1.0) {
            rr.push(row);
            rl.push(l.to_string());
        }
        for row in gaussian_rows(&mut rng, 30 + 5 * k, 16, k as f64 + 0.3, 1.1) {
            sr.push(row);
            sl.push(l.to_string());
        }
    }
    let mut brute = 0.0;
    for l in labels {
        let real_l: Vec<Vec<f64>> = rr.iter().zip(&rl).filter(|(_, t)| *t == l).map(|(r, _)| r.clone()).collect();
        let synth_l: Vec<Vec<f64>> = sr.iter().zip(&sl).filter(|(_, t)| *t == l).map(|(r, _)| r.clone()).collect();
        brute += oracle_sfid(&real_l, &synth_l, 1.0);
    }
    brute /= labels.len() as f64;
    let ours = csfid(
        &FeatureSet::from_rows(&rr, Some(rl)).map_err(|e| e.to_string())?,
        &FeatureSet::from_rows(&sr, Some(sl)).map_err(|e| e.to_string())?,
        1.0,
    )
    .map_err(|e| e.to_string())?;
    let diff = (ours - brute).abs();
    ensure!(diff <= 1e-10 * brute.abs().max(1.0), "csfid differs from brute force by {diff:e}");
    Ok(format!("sfid rel err {worst_sfid:.1e}, csfid abs diff {diff:.1e}"))
}

// 2 ---------------------------------------------------------------------------

fn smooth_image(size: usize, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Image {
    let f: [f64; 9] = std::array::from_fn(|_| rng.random_range(0.0..std::f64::consts::TAU));
    let s = size as f64;
    Image::from_fn(size, size, |(y, x, c)| {
        let t = 0.5 * (1.0 + (f[c] + 2.0 * y as f64 / s * (1.0 + f[c + 3]) + 3.0 * x as f64 / s * f[c + 6] / 6.0).sin());
        lo + (hi - lo) * t
    })
    .unwrap()
}

fn gradient_fidelity(_: &Corpus) -> Outcome {
    let suite = SurrogateConfig::default().build().map_err(|e| e.to_string())?;
    let backends = suite.backends(8, AugmentationSpec::standard(0)).map_err(|e| e.to_string())?;
    let query = TransformQuery::adhoc("q", "state", "tabby cat", "snow leopard");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for norm in [LatentNorm::L1, LatentNorm::L2, LatentNorm::L21] {
        for state in 0..20u64 {
            let hp = HyperParams {
                encode_resolution: 32,
                latent_norm: norm,
                rng_seed: state,
                ..HyperParams::default()
            };
            ensure!(hp.lambda_latent > 0.0 && hp.lambda_perceptual > 0.0, "a loss term is inactive");
            let input = smooth_image(32, &mut rng, 0.2, 0.8);
            let prepared = prepare(&query, &input, &backends, &hp).map_err(|e| e.to_string())?;
            let ctx = prepared.context(&backends, &hp);
            // offsets bounded away from zero keep every probe on one side of
            // the ℓ1 / ℓ2,1 kinks
            let z = prepared.initial.values().mapv(|v| {
                let m = rng.random_range(0.005..0.05);
                if rng.random::<bool>() { v + m } else { v - m }
            });
            let z = LatentCode::new(z).map_err(|e| e.to_string())?;
            let step = rng.random_range(0..160);
            let (_, grad) = total_loss_and_grad(&z, &ctx, step).map_err(|e| e.to_string())?;
            let (c, hh, ww) = z.values().dim();
            let (mut err, mut scale) = (0.0f64, 0.0f64);
            for _ in 0..16 {
                let idx = (rng.random_range(0..c), rng.random_range(0..hh), rng.random_range(0..ww));
                let eval = |delta: f64| {
                    let mut zz = z.clone();
                    zz.values_mut()[idx] += delta;
                    total_loss(&zz, &ctx, step).map(|b| b.total)
                };
                let fd = (eval(h).map_err(|e| e.to_string())? - eval(-h).map_err(|e| e.to_string())?) / (2.0 * h);
                err = err.max((fd - grad.values()[idx]).abs());
                scale = scale.max(fd.abs());
            }
            worst = worst.max(err / scale);
        }
    }
    ensure!(worst <= 1e-4, "max relative gradient error {worst:e}");
    Ok(format!("max relative error {worst:.1e} over 60 states"))
}

// 3 ---------------------------------------------------------------------------

fn update_norm(_: &Corpus) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let shape = (rng.random_range(1..5), rng.random_range(1..9), rng.random_range(1..9));
        let z = Array3::from_shape_fn(shape, |_| rng.random_range(-5.0..5.0));
        let scale = 10f64.powf(rng.random_range(-6.0..6.0));
        let g = Array3::from_shape_fn(shape, |_| scale * rng.sample::<f64, _>(StandardNormal));
        let mu = rng.random_range(1e-3..1.0);
        let z = LatentCode::new(z).map_err(|e| e.to_string())?;
        let next = fgm_step(&z, &g, mu).map_err(|e| e.to_string())?;
        let step_norm = (next.values() - z.values()).iter().map(|d| d * d).sum::<f64>().sqrt();
        worst = worst.max((step_norm - mu).abs());
    }
    ensure!(worst <= 1e-12, "update norm off by {worst:e}");
    let z = LatentCode::new(Array3::from_elem((2, 3, 3), 0.7)).map_err(|e| e.to_string())?;
    let same = fgm_step(&z, &Array3::zeros((2, 3, 3)), 0.05).map_err(|e| e.to_string())?;
    ensure!(same == z, "zero gradient moved the latent");
    Ok(format!("max |‖Δz‖ − μ| = {worst:.1e}"))
}

// 4 ---------------------------------------------------------------------------

/// Text encoder returning one fixed vector.
struct FixedText(Vec<f64>);

impl TextEncoder for FixedText {
    fn name(&self) -> &str {
        "fixed"
    }
    fn embed_dim(&self) -> usize {
        self.0.len()
    }
    fn encode_text(&self, _: &str) -> semtrans_core::Result<Vec<f64>> {
        Ok(self.0.clone())
    }
}

fn convex_toy(_: &Corpus) -> Outcome {
    let size = 24;
    let n = size * size * 3;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut travelled = f64::INFINITY;
    for instance in 0..10u64 {
        let embedder = Arc::new(LinearImageEmbedder::new("lin", 40 + instance, 8, size, 6).map_err(|e| e.to_string())?);
        let input = smooth_image(size, &mut rng, 0.3, 0.7);
        let aim = smooth_image(size, &mut rng, 0.1, 0.9);
        let target = embedder.encode_image(&aim).map_err(|e| e.to_string())?;

        // least-squares oracle on the probed affine map, pixel (h, w, c) order
        let zero = Image::filled(size, size, 0.0).map_err(|e| e.to_string())?;
        let bias = DVector::from_vec(embedder.encode_image(&zero).map_err(|e| e.to_string())?);
        let mut a = DMatrix::<f64>::zeros(8, n);
        for j in 0..n {
            let mut px = Array3::zeros((size, size, 3));
            px[[j / (size * 3), (j / 3) % size, j % 3]] = 1.0;
            let col = embedder.encode_image(&Image::new(px).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            a.set_column(j, &(DVector::from_vec(col) - &bias));
        }
        let z0 = DVector::from_iterator(n, input.pixels().iter().copied());
        let rhs = DVector::from_vec(target.clone()) - &bias - &a * &z0;
        let gram = &a * a.transpose();
        let coef = gram.lu().solve(&rhs).ok_or("singular Gram matrix")?;
        let z_star = &z0 + a.transpose() * coef;
        ensure!(z_star.iter().all(|v| *v > 0.0 && *v < 1.0), "instance {instance}: minimizer leaves the pixel box");

        let ensemble = EnsembleEmbedder::new(
            vec![EnsembleMember::new(embedder.clone(), Arc::new(FixedText(target)))],
            0,
            AugmentationSpec::standard(instance),
        )
        .map_err(|e| e.to_string())?
        .without_member_normalization();
        let backends = Backends {
            ensemble,
            autoencoder: Arc::new(IdentityAutoencoder::new(size)),
            perceptual_opt: Arc::new(PyramidDistance::new(1, 2, 3)),
            perceptual_eval: Arc::new(PyramidDistance::new(2, 2, 3)),
        };
        let hp = HyperParams {
            lambda_image: 0.0,
            lambda_source: 0.0,
            lambda_perceptual: 0.0,
            lambda_latent: 0.0,
            augmentations: 0,
            encode_resolution: size,
            ..HyperParams::default()
        };
        let q = TransformQuery::adhoc("toy", "toy", "source", "target");
        let out = optimize(&q, &input, &backends, &hp, &[]).map_err(|e| e.to_string())?;
        let fin = out.trajectory.final_latent.values();
        let dist = (0..n)
            .map(|j| fin[[j % 3, j / (size * 3), (j / 3) % size]] - z_star[j])
            .map(|d| d * d)
            .sum::<f64>()
            .sqrt();
        worst = worst.max(dist);
        travelled = travelled.min((&z_star - &z0).norm());
    }
    let mu = HyperParams::default().step_size;
    ensure!(worst <= 2.0 * mu, "final iterate {worst:.4} from the minimizer (limit {})", 2.0 * mu);
    Ok(format!("max distance {worst:.4} (limit {:.2}); minimizers at least {travelled:.2} from start", 2.0 * mu))
}

// 5 ---------------------------------------------------------------------------

fn protocol_counts(corpus: &Corpus) -> Outcome {
    let reg = ClusterRegistry::shipped().map_err(|e| e.to_string())?;
    let counts = reg.counts();
    ensure!(counts == RegistryCounts::BENCHMARK, "registry counts {counts:?}");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().to_str().unwrap();
    let index = corpus.index();
    let index = index.to_str().unwrap();
    semtrans(&["--index", index, "--output-dir", out, "build-queries"])?;
    semtrans(&["--index", index, "--output-dir", out, "build-queries", "--split", "dev"])?;
    let text = std::fs::read_to_string(dir.path().join("queries.jsonl")).map_err(|e| e.to_string())?;
    let qs = QuerySet::from_jsonl(&text).map_err(|e| e.to_string())?;
    ensure!(qs.len() == 2184, "{} queries", qs.len());
    let dev: HashSet<&str> = qs.in_split(Split::Dev).map(|q| q.id.as_str()).collect();
    let test: HashSet<&str> = qs.in_split(Split::Test).map(|q| q.id.as_str()).collect();
    ensure!(dev.len() == 1092 && test.len() == 1092, "split {} / {}", dev.len(), test.len());
    ensure!(dev.is_disjoint(&test), "dev and test overlap");
    for q in qs.queries() {
        ensure!(q.source_label != q.target_label, "{}: S = T", q.id);
        ensure!(reg.same_cluster(&q.source_label, &q.target_label), "{}: labels in different clusters", q.id);
    }
    let dev_lines = std::fs::read_to_string(dir.path().join("queries.dev.jsonl")).map_err(|e| e.to_string())?;
    ensure!(dev_lines.lines().count() == 1092, "dev file has {} lines", dev_lines.lines().count());
    Ok("273/47/13; 2184 queries; 1092/1092 disjoint; all same-cluster, S ≠ T".into())
}

// 6 ---------------------------------------------------------------------------

fn read_report(dir: &Path, method: &str) -> Result<MetricReport, String> {
    let text = std::fs::read_to_string(dir.join("reports").join(method).join("report.json")).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn baseline_fixed_points(corpus: &Corpus) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().to_str().unwrap();
    let index_path = corpus.index();
    let base = [
        "--index",
        index_path.to_str().unwrap(),
        "--output-dir",
        out,
        "--set",
        r#"backend_config={"autoencoder":"identity"}"#,
        "--set",
        "hyperparams.encode_resolution=32",
        "--set",
        "evaluation.classifier=oracle",
    ];
    fn with<'a>(base: &[&'a str], extra: &[&'a str]) -> Vec<&'a str> {
        base.iter().chain(extra).copied().collect()
    }
    for which in ["copy", "encode", "retrieve"] {
        semtrans(&with(&base, &["baseline", "--which", which]))?;
    }
    semtrans(&with(&base, &["evaluate", "--method", "copy"]))?;
    semtrans(&with(&base, &["evaluate", "--method", "retrieve"]))?;

    let copy = read_report(dir.path(), "copy")?;
    ensure!(copy.lpips_x100 == 0.0, "copy lpips_x100 = {}", copy.lpips_x100);

    let mut cfg = RunConfig::default();
    cfg.paths.index = Some(index_path.clone());
    let session = Session::new(cfg.clone()).map_err(|e| e.to_string())?;
    let queries = session.selected_queries(None).map_err(|e| e.to_string())?;
    let index = ImageIndex::load(&index_path).map_err(|e| e.to_string())?;
    let ev = &cfg.evaluation;
    let extractor = ProjectionExtractor::new(ev.feature_seed, ev.feature_dim, cfg.hyperparams.metric_resolution, ev.feature_grid)
        .map_err(|e| e.to_string())?;
    let (mut inputs, mut outputs) = (vec![], vec![]);
    for q in &queries {
        let copy_png = dir.path().join(format!("outputs/copy/{}.png", q.id));
        let encode_png = dir.path().join(format!("outputs/encode/{}.png", q.id));
        let copy_bytes = std::fs::read(&copy_png).map_err(|e| e.to_string())?;
        ensure!(copy_bytes == std::fs::read(&encode_png).map_err(|e| e.to_string())?, "{}: encode differs from copy", q.id);
        inputs.push(extractor.extract(&index.load_image(&q.image_id).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?);
        outputs.push(extractor.extract(&Image::load_png(&copy_png).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?);
    }
    let own = sfid(
        &FeatureSet::from_rows(&inputs, None).map_err(|e| e.to_string())?,
        &FeatureSet::from_rows(&outputs, None).map_err(|e| e.to_string())?,
        ev.alpha,
    )
    .map_err(|e| e.to_string())?;
    ensure!(own == 0.0, "copy SFID against its own inputs = {own}");

    let retrieved = std::fs::read_to_string(dir.path().join("outputs/retrieve/retrieved.jsonl")).map_err(|e| e.to_string())?;
    let by_id: BTreeMap<&str, &TransformQuery> = queries.iter().map(|q| (q.id.as_str(), q)).collect();
    let mut audited = 0;
    for line in retrieved.lines() {
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let q = by_id[v["query_id"].as_str().unwrap()];
        let id = v["image_id"].as_str().unwrap();
        ensure!(index.validation_images(&q.target_label).iter().any(|i| i == id), "{}: retrieved {id} is not a `{}` image", q.id, q.target_label);
        audited += 1;
    }
    ensure!(audited == queries.len(), "{audited} retrievals for {} queries", queries.len());
    let retrieve = read_report(dir.path(), "retrieve")?;
    ensure!(retrieve.accuracy_pct == 100.0, "retrieve accuracy {}", retrieve.accuracy_pct);
    Ok(format!(
        "{} queries: copy LPIPS 0, own SFID 0, encode == copy, retrieve labels 100%, accuracy {:.1}%",
        queries.len(),
        retrieve.accuracy_pct
    ))
}

// 7 ---------------------------------------------------------------------------

fn adjacent_increases(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] > w[0]).count()
}

fn regularization_monotonicity(corpus: &Corpus) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::default();
    cfg.paths.index = Some(corpus.index());
    cfg.paths.output_dir = dir.path().to_path_buf();
    cfg.hyperparams.encode_resolution = 32;
    cfg.filter.limit = Some(20);
    let session = Session::new(cfg).map_err(|e| e.to_string())?;
    let mut summary = Vec::new();
    for (param, grid) in [
        (SweepParam::LambdaPerceptual, "0.05,0.1,0.15,0.2"),
        (SweepParam::LambdaLatent, "0,0.05,0.1"),
    ] {
        let rows = sweep(&session, &SweepSpec::from_list(param, grid)).map_err(|e| e.to_string())?;
        let mut values = Vec::new();
        for r in &rows {
            ensure!(r.queries == 20, "{param}: {} queries", r.queries);
            values.push(r.lpips_x100.ok_or_else(|| format!("{param}={} failed: {:?}", r.value, r.error))?);
        }
        let bumps = adjacent_increases(&values);
        ensure!(bumps <= 1, "{param}: {bumps} increases in {values:?}");
        let shown: Vec<String> = values.iter().map(|v| format!("{v:.3}")).collect();
        summary.push(format!("{param} [{}]", shown.join(", ")));
    }
    Ok(summary.join("; "))
}

// 8 ---------------------------------------------------------------------------

fn ensemble_properties(_: &Corpus) -> Outcome {
    let members = [(8, 24), (12, 20), (16, 30), (6, 16), (10, 28)];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let image = smooth_image(40, &mut rng, 0.0, 1.0);
    for n in [1, 2, 3, 5] {
        let cfg = SurrogateConfig { members: members[..n].to_vec(), ..Default::default() };
        let ens = cfg.build().and_then(|s| s.ensemble(8, AugmentationSpec::standard(0))).map_err(|e| e.to_string())?;
        let expected: usize = members[..n].iter().map(|m| m.0).sum();
        let got = ens.embed_image(&image, 3).map_err(|e| e.to_string())?.vector.dim();
        ensure!(got == expected, "{n} members: dim {got}, expected {expected}");
    }
    let suite = SurrogateConfig::default().build().map_err(|e| e.to_string())?;
    let with_aug = suite.ensemble(8, AugmentationSpec::identity(1)).map_err(|e| e.to_string())?;
    let without = suite.ensemble(0, AugmentationSpec::identity(1)).map_err(|e| e.to_string())?;
    let a = with_aug.embed_image(&image, 9).map_err(|e| e.to_string())?.vector;
    let b = without.embed_image(&image, 9).map_err(|e| e.to_string())?.vector;
    let diff = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    ensure!(diff <= 1e-10, "identity d=8 differs from d=0 by {diff:e}");
    Ok(format!("dims match for 1/2/3/5 members; identity d=8 vs d=0 max diff {diff:.1e}"))
}

// 9 ---------------------------------------------------------------------------

fn pipeline_manifest(corpus: &Corpus, workers: &str) -> Result<(Manifest, tempfile::TempDir), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().to_str().unwrap().to_string();
    let index = corpus.index();
    let base = vec![
        "--index".to_string(),
        index.to_str().unwrap().to_string(),
        "--output-dir".to_string(),
        out,
        "--workers".to_string(),
        workers.to_string(),
        "--set".to_string(),
        "hyperparams.encode_resolution=32".to_string(),
        "--set".to_string(),
        "hyperparams.steps=24".to_string(),
        "--set".to_string(),
        "filter.limit=6".to_string(),
        "--set".to_string(),
        "snapshot_steps=[0,8,24]".to_string(),
    ];
    let input = corpus.root.join("images/val/goldfish/0.png");
    let commands: Vec<Vec<String>> = vec![
        vec!["edit".into()],
        vec!["edit".into(), "--image".into(), input.to_str().unwrap().into(), "--source".into(), "goldfish".into(), "--target".into(), "great white shark".into(), "--name".into(), "fish".into()],
        vec!["baseline".into(), "--which".into(), "copy".into()],
        vec!["baseline".into(), "--which".into(), "encode".into()],
        vec!["baseline".into(), "--which".into(), "retrieve".into()],
        vec!["evaluate".into(), "--method".into(), "edit".into()],
        vec!["evaluate".into(), "--method".into(), "copy".into()],
        vec!["sweep".into(), "--param".into(), "lambda_p".into(), "--values".into(), "0.05,0.2".into()],
    ];
    for c in commands {
        let args: Vec<&str> = base.iter().chain(&c).map(String::as_str).collect();
        semtrans(&args)?;
    }
    let m = Manifest::load(dir.path()).map_err(|e| e.to_string())?;
    Ok((m, dir))
}

fn end_to_end_determinism(corpus: &Corpus) -> Outcome {
    let (a, _keep_a) = pipeline_manifest(corpus, "1")?;
    let (b, _keep_b) = pipeline_manifest(corpus, "3")?;
    ensure!(!a.artifacts.is_empty(), "empty manifest");
    let commands: BTreeSet<&str> = a.artifacts.values().map(|x| x.command.split(' ').next().unwrap()).collect();
    for c in ["edit", "baseline", "evaluate", "sweep"] {
        ensure!(commands.contains(c), "no artifact from `{c}`");
    }
    for (path, art) in &a.artifacts {
        let other = b.artifacts.get(path).ok_or_else(|| format!("{path} missing from the rerun"))?;
        ensure!(art == other, "{path} differs between runs");
    }
    ensure!(a.artifacts.len() == b.artifacts.len(), "artifact counts differ");
    Ok(format!("{} artifacts byte-identical across reruns (1 vs 3 workers)", a.artifacts.len()))
}

// -----------------------------------------------------------------------------

struct Criterion {
    id: u8,
    name: &'static str,
    budget: Option<Duration>,
    check: fn(&Corpus) -> Outcome,
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, name: "metric oracle equivalence", budget: Some(Duration::from_secs(1)), check: metric_oracles },
    Criterion { id: 2, name: "gradient fidelity", budget: Some(Duration::from_secs(30)), check: gradient_fidelity },
    Criterion { id: 3, name: "update-norm invariant", budget: None, check: update_norm },
    Criterion { id: 4, name: "convex-toy convergence", budget: Some(Duration::from_secs(10)), check: convex_toy },
    Criterion { id: 5, name: "protocol counts", budget: None, check: protocol_counts },
    Criterion { id: 6, name: "baseline fixed points", budget: None, check: baseline_fixed_points },
    Criterion { id: 7, name: "regularization monotonicity", budget: Some(Duration::from_secs(300)), check: regularization_monotonicity },
    Criterion { id: 8, name: "ensemble properties", budget: None, check: ensemble_properties },
    Criterion { id: 9, name: "end-to-end determinism", budget: None, check: end_to_end_determinism },
];

fn main() {
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let dir = tempfile::tempdir().expect("tempdir");
    let root = dir.path().join("corpus");
    semtrans(&["fixtures", "--out", root.to_str().unwrap(), "--val-per-label", "3", "--train-per-label", "3", "--size", "32"])
        .expect("fixture corpus");
    let corpus = Corpus { _dir: dir, root };

    let mut failed = 0;
    for c in CRITERIA {
        if !args.is_empty() && !args.iter().any(|a| c.name.contains(a.as_str()) || a == &c.id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| (c.check)(&corpus)))
            .unwrap_or_else(|p| Err(format!("panicked: {:?}", p.downcast_ref::<String>().map(String::as_str).or(p.downcast_ref::<&str>().copied()))));
        let elapsed = start.elapsed();
        let result = match (result, c.budget) {
            (Ok(_), Some(b)) if elapsed > b => Err(format!("took {elapsed:.2?}, budget {b:?}")),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("PASS [{}] {} ({elapsed:.2?}): {detail}", c.id, c.name),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {} ({elapsed:.2?}): {why}", c.id, c.name);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
