//! The experiment runners behind the CLI verbs.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use ergodisc_core::linear::{trial_seed, MC_GENERATOR};
use ergodisc_core::measure::to_histogram;
use ergodisc_core::{
    analyze_full_grid, colorize, floyd_orbit, global_measure, grid_project, histogram_distance, lebesgue_histogram,
    orbit_measure, preimage_search, random_sl_sequence, rasterize, Budget, DiscreteMeasure, DiscretizedMap, GridSpec,
    MatrixSequence, TorusMapExpr, TorusPoint,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{Experiment, ExperimentConfig, LinearConfig, Starts};
use crate::doc::SequenceDoc;
use crate::error::{Error, Result};
use crate::formats::{
    analysis_csv, decay_csv, digest_comment, egrd_bytes, histogram_csv, measure_csv, pixel_csv, png_bytes, ppm_bytes,
    read_measure_csv, write_atomic, CsvTable, ORIENTATION_NOTE,
};
use crate::parallel;

/// A sub-run that failed without stopping the rest of the scan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub run: String,
    pub message: String,
    pub budget: bool,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub failures: Vec<Failure>,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;

impl Report {
    /// 0 if every sub-run succeeded, 3 if the only failures were budget
    /// exhaustion, 4 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            EXIT_OK
        } else if self.failures.iter().all(|f| f.budget) {
            EXIT_BUDGET
        } else {
            EXIT_PARTIAL
        }
    }
}

/// Exit code for an error that stopped a command before or outside its runs.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Format { .. } => EXIT_CONFIG,
        Error::Core(e) if e.is_budget() => EXIT_BUDGET,
        Error::Core(_) => EXIT_CONFIG,
        Error::Io { .. } => EXIT_IO,
    }
}

/// Resolves `config` for `experiment` and runs it on a pool of the
/// configured size.
pub fn execute(config: &ExperimentConfig, experiment: Experiment) -> Result<Report> {
    let cfg = config.effective(experiment)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| run(&cfg))
}

/// Runs an already effective configuration on the current rayon pool.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let experiment = cfg.experiment.ok_or_else(|| Error::Config("experiment not set".into()))?;
    let ctx = Ctx {
        cfg,
        digest: cfg.digest(),
        dir: cfg.out_dir().join(experiment.as_str()),
        budget: cfg.budget(),
        report: Mutex::new(Report::default()),
    };
    let name = match experiment {
        Experiment::MeasureOrbit => measure_orbit(&ctx)?,
        Experiment::MeasureGlobal => measure_global(&ctx)?,
        Experiment::LinearRate => linear_rate(&ctx)?,
        Experiment::LinearMeanrate => linear_meanrate(&ctx)?,
        Experiment::LinearPreimage => linear_preimage(&ctx)?,
        Experiment::LinearDecay => linear_decay(&ctx)?,
        Experiment::Render => render(&ctx)?,
    };
    let echo = json!({ "config_sha256": ctx.digest, "config": cfg });
    let bytes = serde_json::to_vec_pretty(&echo).expect("config serializes");
    ctx.write(&format!("{name}.config.json"), &bytes)?;
    let mut report = ctx.report.into_inner().expect("no poisoned lock");
    report.files.sort();
    report.failures.sort_by(|a, b| a.run.cmp(&b.run));
    Ok(report)
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    digest: String,
    dir: PathBuf,
    budget: Budget,
    report: Mutex<Report>,
}

impl Ctx<'_> {
    fn write(&self, file: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(file);
        write_atomic(&path, bytes)?;
        self.report.lock().expect("no poisoned lock").files.push(path);
        Ok(())
    }

    fn fail(&self, run: String, err: &Error) -> String {
        let budget = err.is_budget();
        let message = err.to_string();
        let status = format!("{}: {message}", if budget { "budget" } else { "error" });
        self.report.lock().expect("no poisoned lock").failures.push(Failure { run, message, budget });
        status
    }

    fn linear(&self) -> &LinearConfig {
        self.cfg.linear.as_ref().expect("effective linear config")
    }

    fn image_comments(&self, img: &ergodisc_core::ColorImage) -> Vec<String> {
        vec![
            digest_comment(&self.digest),
            ORIENTATION_NOTE.to_string(),
            format!("log10 mass color scale: {} to {}", img.range_low, img.range_high),
        ]
    }

    /// Raster, pixel CSV and image files for `mu` under `base`.
    fn write_raster(&self, base: &str, mu: &DiscreteMeasure) -> Result<()> {
        let raster = self.cfg.raster.clone().unwrap_or_default();
        let spec = raster.spec();
        let pixels = rasterize(mu, &spec)?;
        let img = colorize(&pixels, &spec)?;
        let comments = self.image_comments(&img);
        self.write(&format!("{base}.pixels.csv"), &pixel_csv(&pixels, &self.digest).to_bytes())?;
        self.write(&format!("{base}.ppm"), &ppm_bytes(&img, &comments))?;
        if raster.png() {
            self.write(&format!("{base}.png"), &png_bytes(&img, &comments)?)?;
        }
        Ok(())
    }
}

fn fmt_f64(v: f64) -> String {
    v.to_string()
}

struct Start {
    coords: Vec<f64>,
    suffix: String,
}

/// Explicit points get `_p<j>` suffixes when there is more than one; random
/// point `j` is drawn from its own seed `seed + j` and gets `_s<seed + j>`.
fn starts(cfg: &ExperimentConfig, dim: usize) -> Vec<Start> {
    match cfg.starts.as_ref().expect("effective starts") {
        Starts::Points(p) => p
            .iter()
            .enumerate()
            .map(|(j, c)| Start { coords: c.clone(), suffix: if p.len() > 1 { format!("_p{j}") } else { String::new() } })
            .collect(),
        Starts::Random { random } => (0..random.count)
            .map(|j| {
                let s = trial_seed(random.seed.expect("effective seed"), j);
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                Start { coords: (0..dim).map(|_| rng.random::<f64>()).collect(), suffix: format!("_s{s}") }
            })
            .collect(),
    }
}

fn resolved_map(cfg: &ExperimentConfig) -> Result<(TorusMapExpr, String)> {
    let map = cfg.map.as_ref().expect("effective map").resolve()?;
    Ok((map, cfg.map_name.clone().expect("effective map name")))
}

fn measure_orbit(ctx: &Ctx) -> Result<String> {
    let cfg = ctx.cfg;
    let (map, name) = resolved_map(cfg)?;
    let dim = map.dim();
    let level = cfg.level.expect("effective level");
    let orders = cfg.orders.as_ref().expect("effective orders").expand()?;
    let starts = starts(cfg, dim);
    let runs: Vec<(u64, &Start)> = orders.iter().flat_map(|&n| starts.iter().map(move |s| (n, s))).collect();

    let rows: Vec<Vec<String>> = runs
        .par_iter()
        .map(|&(n, start)| {
            let base = format!("{name}_N{n}{}", start.suffix);
            let mut index = vec![String::new(); dim];
            let mut run = || -> Result<(u64, u64, f64)> {
                let grid = GridSpec::new(dim, n)?;
                let x = TorusPoint::new(start.coords.clone())?;
                let idx = grid_project(&grid, &x)?;
                for (slot, i) in index.iter_mut().zip(&idx.0) {
                    *slot = i.to_string();
                }
                let dmap = DiscretizedMap::new(map.clone(), grid)?;
                let orbit = floyd_orbit(&dmap, &idx, &ctx.budget)?;
                let mu = orbit_measure(&orbit)?;
                let dist = histogram_distance(&to_histogram(&mu, level)?, &lebesgue_histogram(&grid, level)?)?;
                ctx.write(&format!("{base}.csv"), &measure_csv(&mu, &ctx.digest).to_bytes())?;
                ctx.write_raster(&base, &mu)?;
                Ok((orbit.tail_length(), orbit.cycle_length(), dist))
            };
            let result = run();
            let mut row = vec![n.to_string()];
            row.extend(start.coords.iter().map(|&c| fmt_f64(c)));
            row.extend(index);
            match result {
                Ok((tail, cycle, dist)) => {
                    row.extend([tail.to_string(), cycle.to_string(), fmt_f64(dist), "ok".into()]);
                }
                Err(e) => {
                    let status = ctx.fail(base, &e);
                    row.extend([String::new(), String::new(), String::new(), status]);
                }
            }
            row
        })
        .collect();

    let header = ["N".to_string()]
        .into_iter()
        .chain((0..dim).map(|d| format!("start_x{d}")))
        .chain((0..dim).map(|d| format!("start_i{d}")))
        .chain(["tail", "cycle_length", "distance_to_leb", "status"].map(String::from));
    let mut t = CsvTable::new(header);
    t.comment(digest_comment(&ctx.digest)).comment(format!("map: {name}; dyadic level K = {level}"));
    for r in rows {
        t.row(r);
    }
    ctx.write(&format!("{name}.csv"), &t.to_bytes())?;
    Ok(name)
}

fn measure_global(ctx: &Ctx) -> Result<String> {
    let cfg = ctx.cfg;
    let (map, name) = resolved_map(cfg)?;
    let dim = map.dim();
    let level = cfg.level.expect("effective level");
    let orders = cfg.orders.as_ref().expect("effective orders").expand()?;

    // One grid at a time: each already uses every worker for its table.
    let mut t = CsvTable::new([
        "N",
        "cells",
        "cycles",
        "periodic_points",
        "recurrence_num",
        "recurrence_den",
        "recurrence_degree",
        "distance_to_leb",
        "status",
    ]);
    t.comment(digest_comment(&ctx.digest)).comment(format!("map: {name}; dyadic level K = {level}"));
    for n in orders {
        let base = format!("{name}_N{n}");
        let run = || -> Result<Vec<String>> {
            let grid = GridSpec::new(dim, n)?;
            let dmap = DiscretizedMap::new(map.clone(), grid)?;
            let table = parallel::materialize(&dmap, &ctx.budget)?;
            if cfg.write_table == Some(true) {
                ctx.write(&format!("{base}.egrd"), &egrd_bytes(&table)?)?;
            }
            let analysis = analyze_full_grid(&table, &ctx.budget)?;
            drop(table);
            let mu = global_measure(&analysis)?;
            let rec = analysis.recurrence_degree();
            let hist = to_histogram(&mu, level)?;
            let dist = histogram_distance(&hist, &lebesgue_histogram(&grid, level)?)?;
            ctx.write(&format!("{base}.csv"), &measure_csv(&mu, &ctx.digest).to_bytes())?;
            ctx.write(&format!("{base}.cycles.csv"), &analysis_csv(&analysis, &ctx.digest).to_bytes())?;
            if cfg.write_histogram == Some(true) {
                ctx.write(&format!("{base}.dyadic.csv"), &histogram_csv(&hist, &ctx.digest).to_bytes())?;
            }
            ctx.write_raster(&base, &mu)?;
            Ok(vec![
                grid.cells().to_string(),
                analysis.cycles().len().to_string(),
                analysis.periodic_points().to_string(),
                rec.num.to_string(),
                rec.den.to_string(),
                fmt_f64(rec.to_f64()),
                fmt_f64(dist),
                "ok".into(),
            ])
        };
        let mut row = vec![n.to_string()];
        match run() {
            Ok(r) => row.extend(r),
            Err(e) => {
                let status = ctx.fail(base, &e);
                row.extend(std::iter::repeat_n(String::new(), 7));
                row.push(status);
            }
        }
        t.row(row);
    }
    ctx.write(&format!("{name}.csv"), &t.to_bytes())?;
    Ok(name)
}

struct NamedSequence {
    id: u32,
    seed: Option<u64>,
    seq: MatrixSequence,
}

/// The sequences of a linear experiment and the base name of its files.
fn sequences(l: &LinearConfig) -> Result<(Vec<NamedSequence>, String)> {
    let name = l.name.clone().expect("effective name");
    if let Some(doc) = &l.sequence {
        return Ok((vec![NamedSequence { id: 0, seed: None, seq: doc.to_sequence()? }], name));
    }
    let r = l.random.as_ref().expect("effective sequence source");
    let seed = r.seed.expect("effective seed");
    let seqs = (0..r.count)
        .map(|i| {
            let s = trial_seed(seed, i);
            random_sl_sequence(r.dim, r.length, r.norm_bound, s)
                .map(|seq| NamedSequence { id: i, seed: Some(s), seq })
                .map_err(|e| Error::Config(e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((seqs, format!("{name}_s{seed}")))
}

fn write_sequences(ctx: &Ctx, base: &str, seqs: &[NamedSequence]) -> Result<()> {
    let list: Vec<_> = seqs
        .iter()
        .map(|s| json!({ "id": s.id, "seed": s.seed, "sequence": SequenceDoc::from_sequence(&s.seq) }))
        .collect();
    let doc = json!({ "config_sha256": ctx.digest, "sequences": list });
    ctx.write(&format!("{base}.sequences.json"), &serde_json::to_vec_pretty(&doc).expect("serializes"))
}

fn prefix_tasks(l: &LinearConfig, seqs: &[NamedSequence]) -> Vec<(usize, usize)> {
    seqs.iter()
        .enumerate()
        .flat_map(|(i, s)| {
            let ks = if l.all_prefixes == Some(true) { 1..=s.seq.len() } else { s.seq.len()..=s.seq.len() };
            ks.map(move |k| (i, k))
        })
        .collect()
}

fn seed_field(seed: Option<u64>) -> String {
    seed.map(|s| s.to_string()).unwrap_or_default()
}

fn linear_rate(ctx: &Ctx) -> Result<String> {
    let l = ctx.linear();
    let (seqs, base) = sequences(l)?;
    write_sequences(ctx, &base, &seqs)?;
    let radius = l.radius.expect("effective radius");
    let max_points = l.max_points.expect("effective max_points");
    let compare = l.compare == Some(true);
    let seed = ctx.cfg.seed.expect("effective seed");

    let rows: Vec<Vec<String>> = prefix_tasks(l, &seqs)
        .par_iter()
        .map(|&(i, k)| {
            let s = &seqs[i];
            let mut row = vec![s.id.to_string(), seed_field(s.seed), k.to_string()];
            let run = || -> Result<Vec<String>> {
                let prefix = s.seq.prefix(k)?;
                let bf = parallel::rate_brute_force(&prefix, radius, max_points)?;
                let mut out = vec![fmt_f64(bf.value), radius.to_string(), fmt_f64(bf.convergence_gap)];
                if compare {
                    let samples = l.samples.expect("effective samples");
                    let mc = parallel::mean_rate_mc(&prefix, samples, seed)?;
                    let diff = (bf.value - mc.value).abs();
                    let agree = if diff <= l.tolerance.expect("effective tolerance") { "PASS" } else { "FAIL" };
                    out.extend([
                        fmt_f64(mc.value),
                        samples.to_string(),
                        fmt_f64(mc.convergence_gap),
                        fmt_f64(diff),
                        agree.into(),
                    ]);
                }
                Ok(out)
            };
            match run() {
                Ok(r) => {
                    row.extend(r);
                    row.push("ok".into());
                }
                Err(e) => {
                    let status = ctx.fail(format!("{base} sequence {} k={k}", s.id), &e);
                    row.extend(std::iter::repeat_n(String::new(), if compare { 8 } else { 3 }));
                    row.push(status);
                }
            }
            row
        })
        .collect();

    let mut header = vec!["sequence", "sequence_seed", "k", "tau_estimate", "radius", "convergence_gap"];
    if compare {
        header.extend(["mc_estimate", "samples", "mc_gap", "difference", "agreement"]);
    }
    header.push("status");
    let mut t = CsvTable::new(header);
    t.comment(digest_comment(&ctx.digest)).comment("method: brute_force (sup-norm ball of the given radius)");
    if compare {
        t.comment(format!("monte_carlo generator: {MC_GENERATOR}; seed {seed}; tolerance {}", l.tolerance.expect("set")));
    }
    for r in rows {
        t.row(r);
    }
    ctx.write(&format!("{base}.csv"), &t.to_bytes())?;
    Ok(base)
}

fn linear_meanrate(ctx: &Ctx) -> Result<String> {
    let l = ctx.linear();
    let (seqs, base) = sequences(l)?;
    write_sequences(ctx, &base, &seqs)?;
    let samples = l.samples.expect("effective samples");
    let seed = ctx.cfg.seed.expect("effective seed");
    let rows: Vec<Vec<String>> = prefix_tasks(l, &seqs)
        .par_iter()
        .map(|&(i, k)| {
            let s = &seqs[i];
            let mut row = vec![s.id.to_string(), seed_field(s.seed), k.to_string()];
            match s.seq.prefix(k).map_err(Error::from).and_then(|p| Ok(parallel::mean_rate_mc(&p, samples, seed)?)) {
                Ok(mc) => row.extend([fmt_f64(mc.value), samples.to_string(), fmt_f64(mc.convergence_gap), "ok".into()]),
                Err(e) => {
                    let status = ctx.fail(format!("{base} sequence {} k={k}", s.id), &e);
                    row.extend([String::new(), String::new(), String::new(), status]);
                }
            }
            row
        })
        .collect();
    let mut t = CsvTable::new(["sequence", "sequence_seed", "k", "tau_estimate", "samples", "convergence_gap", "status"]);
    t.comment(digest_comment(&ctx.digest)).comment(format!("method: monte_carlo; generator: {MC_GENERATOR}; seed {seed}"));
    for r in rows {
        t.row(r);
    }
    ctx.write(&format!("{base}.csv"), &t.to_bytes())?;
    Ok(base)
}

fn linear_preimage(ctx: &Ctx) -> Result<String> {
    let l = ctx.linear();
    let (seqs, base) = sequences(l)?;
    write_sequences(ctx, &base, &seqs)?;
    let target = l.target.clone().expect("effective target");
    let radius = l.radius.expect("effective radius");
    let dim = seqs[0].seq.dim();
    if target.len() != dim {
        return Err(Error::Config(format!("target has {} components, sequences have dimension {dim}", target.len())));
    }
    let found: Vec<_> = seqs
        .par_iter()
        .map(|s| (s, preimage_search(&s.seq, &target, radius, l.max_points.expect("effective max_points"))))
        .collect();
    let header = ["sequence".to_string()].into_iter().chain((0..dim).map(|d| format!("x{d}"))).chain(["sup_norm".into()]);
    let mut t = CsvTable::new(header);
    t.comment(digest_comment(&ctx.digest));
    t.comment(format!("preimages of {target:?} within sup-norm radius {radius}, largest norm first"));
    for (s, res) in found {
        match res {
            Ok(points) => {
                for x in points {
                    let sup = x.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
                    let mut row = vec![s.id.to_string()];
                    row.extend(x.iter().map(i64::to_string));
                    row.push(sup.to_string());
                    t.row(row);
                }
            }
            Err(e) => {
                let status = ctx.fail(format!("{base} sequence {}", s.id), &e.into());
                t.comment(format!("sequence {}: {status}", s.id));
            }
        }
    }
    ctx.write(&format!("{base}.csv"), &t.to_bytes())?;
    Ok(base)
}

fn linear_decay(ctx: &Ctx) -> Result<String> {
    let l = ctx.linear();
    let r = l.random.as_ref().expect("effective random");
    let seed = r.seed.expect("effective seed");
    let base = format!("{}_s{seed}", l.name.as_deref().expect("effective name"));
    let radius = l.radius.expect("effective radius");
    let max_points = l.max_points.expect("effective max_points");
    let per_trial: Vec<_> = (0..r.count)
        .into_par_iter()
        .map(|t| ergodisc_core::linear::decay_trial(r.dim, r.length, r.norm_bound, seed, t, radius, max_points))
        .collect();
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    let mut decreasing = 0;
    for (t, res) in per_trial.into_iter().enumerate() {
        match res {
            Ok(trial) => {
                if trial.last().expect("k_max >= 1").tau_estimate < trial[0].tau_estimate {
                    decreasing += 1;
                }
                rows.extend(trial);
            }
            Err(e) => {
                ctx.fail(format!("{base} trial {t}"), &e.into());
                failed.push(t);
            }
        }
    }
    let mut t = decay_csv(&rows, &ctx.digest);
    t.comment(format!(
        "dim {}, k_max {}, norm bound {}; trials with tau^k_max < tau^1: {decreasing} of {}",
        r.dim,
        r.length,
        r.norm_bound,
        r.count as usize - failed.len()
    ));
    if !failed.is_empty() {
        t.comment(format!("failed trials: {failed:?}"));
    }
    ctx.write(&format!("{base}.csv"), &t.to_bytes())?;
    Ok(base)
}

fn render(ctx: &Ctx) -> Result<String> {
    let r = ctx.cfg.render.as_ref().expect("effective render");
    let name = r.name.clone().expect("effective name");
    let mu = read_measure_csv(Path::new(&r.input), r.order)?;
    ctx.write_raster(&name, &mu)?;
    Ok(name)
}
