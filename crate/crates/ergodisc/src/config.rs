//! Experiment configuration: the JSON document, CLI overrides, defaults and
//! the digest stamped into every output.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use ergodisc_core::linear::DEFAULT_MAX_POINTS;
use ergodisc_core::measure::DEFAULT_LEVEL;
use ergodisc_core::{Budget, RasterSpec, Rgb};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::doc::{MapRef, SequenceDoc};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    MeasureOrbit,
    MeasureGlobal,
    LinearRate,
    LinearMeanrate,
    LinearPreimage,
    LinearDecay,
    Render,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::MeasureOrbit => "measure-orbit",
            Experiment::MeasureGlobal => "measure-global",
            Experiment::LinearRate => "linear-rate",
            Experiment::LinearMeanrate => "linear-meanrate",
            Experiment::LinearPreimage => "linear-preimage",
            Experiment::LinearDecay => "linear-decay",
            Experiment::Render => "render",
        }
    }

    fn is_linear(self) -> bool {
        matches!(
            self,
            Experiment::LinearRate | Experiment::LinearMeanrate | Experiment::LinearPreimage | Experiment::LinearDecay
        )
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Grid orders: a single value, a list, or an inclusive arithmetic range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Orders {
    One(u64),
    List(Vec<u64>),
    Range(OrderRange),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderRange {
    pub start: u64,
    /// Inclusive.
    pub end: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<u64>,
}

impl Orders {
    pub fn expand(&self) -> Result<Vec<u64>> {
        let v = match self {
            Orders::One(n) => vec![*n],
            Orders::List(v) => v.clone(),
            Orders::Range(r) => {
                let step = r.step.unwrap_or(1);
                if step == 0 {
                    return Err(Error::Config("order range step must be positive".into()));
                }
                (r.start..=r.end).step_by(step as usize).collect()
            }
        };
        if v.is_empty() {
            return Err(Error::Config("no grid orders given".into()));
        }
        if v.contains(&0) {
            return Err(Error::Config("grid orders must be positive".into()));
        }
        Ok(v)
    }
}

/// Starting points: explicit torus coordinates, or uniformly random ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Starts {
    Points(Vec<Vec<f64>>),
    Random { random: RandomStarts },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomStarts {
    pub count: u32,
    /// Defaults to the top-level seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RasterConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub colormap: Option<Vec<[u8; 3]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub floor_decades: Option<f64>,
    /// Also write a PNG next to the PPM.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub png: Option<bool>,
}

impl RasterConfig {
    fn filled(&self) -> Self {
        let d = RasterSpec::default();
        RasterConfig {
            width: Some(self.width.unwrap_or(d.width)),
            height: Some(self.height.unwrap_or(d.height)),
            colormap: Some(self.colormap.clone().unwrap_or_else(|| d.colormap.iter().map(|c| c.0).collect())),
            floor_decades: Some(self.floor_decades.unwrap_or(d.floor_decades)),
            png: Some(self.png.unwrap_or(false)),
        }
    }

    pub fn spec(&self) -> RasterSpec {
        let f = self.filled();
        RasterSpec {
            width: f.width.expect("filled"),
            height: f.height.expect("filled"),
            colormap: f.colormap.expect("filled").into_iter().map(Rgb).collect(),
            floor_decades: f.floor_decades.expect("filled"),
        }
    }

    pub fn png(&self) -> bool {
        self.png.unwrap_or(false)
    }
}

/// Random sequences of random SL matrices; sequence `i` uses seed `seed + i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSequences {
    /// Number of sequences (trials for `linear-decay`).
    pub count: u32,
    pub dim: usize,
    /// Sequence length `k` (`k_max` for `linear-decay`).
    pub length: usize,
    pub norm_bound: f64,
    /// Defaults to the top-level seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequence: Option<SequenceDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomSequences>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Report every prefix `k = 1..=len` rather than only the full sequence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub all_prefixes: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_points: Option<u64>,
    /// `linear-rate` only: also run Monte Carlo and flag agreement.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<i64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    /// Measure CSV to re-render.
    pub input: PathBuf,
    /// Grid order, if the input has no `grid:` comment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<MapRef>,
    /// Name used in output files; defaults to the builtin name or `custom`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map_name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orders: Option<Orders>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub starts: Option<Starts>,
    /// Truncation level `K` of the dyadic distance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raster: Option<RasterConfig>,
    /// `measure-global`: export the successor table as EGRD.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub write_table: Option<bool>,
    /// `measure-global`: export the dyadic histogram of the measure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub write_histogram: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub render: Option<RenderConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 means one per core.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_bytes: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_steps: Option<u64>,
}

/// Values given on the command line; they take precedence over the file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub budget_bytes: Option<u64>,
    pub budget_steps: Option<u64>,
}

pub const DEFAULT_OUT: &str = "out";
pub const DEFAULT_RATE_RADIUS: u64 = 500;
pub const DEFAULT_DECAY_RADIUS: u64 = 100;
pub const DEFAULT_PREIMAGE_RADIUS: u64 = 10;
pub const DEFAULT_SAMPLES: u64 = 1_000_000;
pub const DEFAULT_TOLERANCE: f64 = 0.02;

fn check_name(name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && !name.starts_with('.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!("`{name}` cannot be used in a file name")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.out {
            self.out = Some(v.clone());
        }
        if let Some(v) = o.seed {
            self.seed = Some(v);
        }
        if let Some(v) = o.workers {
            self.workers = Some(v);
        }
        if let Some(v) = o.budget_bytes {
            self.budget_bytes = Some(v);
        }
        if let Some(v) = o.budget_steps {
            self.budget_steps = Some(v);
        }
    }

    /// The configuration with every default spelled out and every reference
    /// resolved; errors here are configuration errors.
    pub fn effective(&self, experiment: Experiment) -> Result<Self> {
        if let Some(e) = self.experiment {
            if e != experiment {
                return Err(Error::Config(format!("config is for `{e}` but `{experiment}` was requested")));
            }
        }
        let mut c = self.clone();
        c.experiment = Some(experiment);
        let seed = *c.seed.get_or_insert(0);
        c.out.get_or_insert_with(|| PathBuf::from(DEFAULT_OUT));
        c.workers.get_or_insert(0);
        c.budget_bytes.get_or_insert(Budget::DEFAULT_BYTES);
        c.budget_steps.get_or_insert(Budget::DEFAULT_STEPS);
        match experiment {
            Experiment::MeasureOrbit | Experiment::MeasureGlobal => {
                let map = c.map.as_ref().ok_or_else(|| Error::Config("`map` is required".into()))?;
                let expr = map.resolve()?;
                let name = c.map_name.get_or_insert_with(|| map.default_name().to_string());
                check_name(name)?;
                c.orders.as_ref().ok_or_else(|| Error::Config("`orders` is required".into()))?.expand()?;
                c.level.get_or_insert(DEFAULT_LEVEL);
                c.raster = Some(c.raster.clone().unwrap_or_default().filled());
                c.raster.as_ref().expect("filled").spec().validate().map_err(|e| Error::Config(e.to_string()))?;
                if experiment == Experiment::MeasureOrbit {
                    let starts = c.starts.get_or_insert_with(|| Starts::Points(vec![vec![0.5; expr.dim()]]));
                    match starts {
                        Starts::Points(p) => {
                            if p.is_empty() {
                                return Err(Error::Config("`starts` is empty".into()));
                            }
                            if let Some(bad) = p.iter().find(|x| x.len() != expr.dim()) {
                                return Err(Error::Config(format!(
                                    "start point of dimension {} for a map of dimension {}",
                                    bad.len(),
                                    expr.dim()
                                )));
                            }
                        }
                        Starts::Random { random } => {
                            random.seed.get_or_insert(seed);
                            if random.count == 0 {
                                return Err(Error::Config("random start count must be positive".into()));
                            }
                        }
                    }
                } else {
                    c.write_table.get_or_insert(false);
                    c.write_histogram.get_or_insert(false);
                }
            }
            e if e.is_linear() => {
                let l = c.linear.get_or_insert_with(LinearConfig::default);
                match (&l.sequence, &mut l.random) {
                    (Some(_), None) => {}
                    (None, Some(r)) => {
                        r.seed.get_or_insert(seed);
                        if r.count == 0 || r.length == 0 {
                            return Err(Error::Config("random sequences need positive count and length".into()));
                        }
                    }
                    _ => return Err(Error::Config("`linear` needs exactly one of `sequence` and `random`".into())),
                }
                if e == Experiment::LinearDecay && l.random.is_none() {
                    return Err(Error::Config("`linear-decay` draws its sequences from `linear.random`".into()));
                }
                let name = l.name.get_or_insert_with(|| if l.random.is_some() { "random" } else { "sequence" }.into());
                check_name(name)?;
                l.max_points.get_or_insert(DEFAULT_MAX_POINTS);
                match e {
                    Experiment::LinearRate => {
                        l.radius.get_or_insert(DEFAULT_RATE_RADIUS);
                        l.all_prefixes.get_or_insert(true);
                        if *l.compare.get_or_insert(false) {
                            l.samples.get_or_insert(DEFAULT_SAMPLES);
                            l.tolerance.get_or_insert(DEFAULT_TOLERANCE);
                        }
                    }
                    Experiment::LinearMeanrate => {
                        l.samples.get_or_insert(DEFAULT_SAMPLES);
                        l.all_prefixes.get_or_insert(true);
                    }
                    Experiment::LinearPreimage => {
                        l.radius.get_or_insert(DEFAULT_PREIMAGE_RADIUS);
                        if l.target.is_none() {
                            return Err(Error::Config("`linear.target` is required".into()));
                        }
                    }
                    _ => {
                        l.radius.get_or_insert(DEFAULT_DECAY_RADIUS);
                    }
                }
                if let Some(s) = &l.sequence {
                    s.to_sequence()?;
                }
            }
            _ => {
                let r = c.render.as_mut().ok_or_else(|| Error::Config("`render.input` is required".into()))?;
                if !r.input.is_file() {
                    return Err(Error::Config(format!("render input {} does not exist", r.input.display())));
                }
                let stem = r.input.file_stem().and_then(|s| s.to_str()).unwrap_or("measure").to_string();
                let name = r.name.get_or_insert(stem);
                check_name(name)?;
                c.raster = Some(c.raster.clone().unwrap_or_default().filled());
                c.raster.as_ref().expect("filled").spec().validate().map_err(|e| Error::Config(e.to_string()))?;
            }
        }
        Ok(c)
    }

    /// SHA-256 of the configuration with the fields that cannot change any
    /// numeric output removed: output directory, worker count and the
    /// purely visual raster settings (colormap, floor, PNG switch).
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        c.workers = None;
        if let Some(r) = &mut c.raster {
            r.colormap = None;
            r.floor_decades = None;
            r.png = None;
        }
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn budget(&self) -> Budget {
        Budget {
            bytes: self.budget_bytes.unwrap_or(Budget::DEFAULT_BYTES),
            steps: self.budget_steps.unwrap_or(Budget::DEFAULT_STEPS),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }
}
