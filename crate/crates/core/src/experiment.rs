//! End-to-end runs behind the command-line tool: degrade a dataset, train
//! and evaluate every method over several seeds, and summarize text depth.
//!
//! Every output is a pure function of the configuration and the inputs.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{self, LabeledExample};
use crate::error::{Error, Result};
use crate::eval::{evaluate, fmt4, EvalReport};
use crate::hierarchy::Hierarchy;
use crate::noise::{degrade_dataset, DepthModel};
use crate::synth::SyntheticConfig;
use crate::textdepth::{depth_histogram, Lexicon, TextRecord};
use crate::training::{train, Method, SgdrSchedule, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub lr_max: f64,
    pub lr_min: f64,
    pub t0: usize,
    pub warmup_steps: usize,
    pub warmup_lr: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub hidden: Option<usize>,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            lr_max: 0.5,
            lr_min: 1e-4,
            t0: 1500,
            warmup_steps: 0,
            warmup_lr: 0.0,
            batch_size: 32,
            steps: 1500,
            hidden: None,
            momentum: 0.0,
            weight_decay: 0.0,
        }
    }
}

impl Hyperparameters {
    pub fn schedule(&self) -> Result<SgdrSchedule> {
        SgdrSchedule::new(
            self.lr_max,
            self.lr_min,
            self.t0,
            self.warmup_steps,
            self.warmup_lr,
            self.steps,
        )
    }

    pub fn train_config(&self, seed: u64) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            schedule: self.schedule()?,
            batch_size: self.batch_size,
            hidden: self.hidden,
            momentum: self.momentum,
            weight_decay: self.weight_decay,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Edge-list file; when absent together with the datasets, the synthetic
    /// generator provides all three.
    pub hierarchy: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub val: Option<PathBuf>,
    pub synthetic: SyntheticConfig,
    pub methods: Vec<Method>,
    pub noise: DepthModel,
    pub inaccuracy: f64,
    pub hyper: Hyperparameters,
    /// Top-k accuracies to report besides top-1.
    pub ks: Vec<usize>,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            hierarchy: None,
            train: None,
            val: None,
            synthetic: SyntheticConfig::default(),
            methods: Method::ALL.to_vec(),
            noise: DepthModel::Benchmark,
            inaccuracy: 0.0,
            hyper: Hyperparameters::default(),
            ks: vec![],
            seeds: vec![0, 1, 2],
            out: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            line: source.line(),
            source,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidParameters(
                "at least one seed is required".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameters(
                "at least one method is required".into(),
            ));
        }
        self.noise.validate()?;
        self.hyper.schedule()?;
        Ok(())
    }

    /// Loads the hierarchy and datasets, or generates them.
    pub fn inputs(&self) -> Result<(Hierarchy, Vec<LabeledExample>, Vec<LabeledExample>)> {
        match (&self.hierarchy, &self.train, &self.val) {
            (None, None, None) => {
                let d = self.synthetic.generate()?;
                Ok((d.hierarchy, d.train, d.val))
            }
            (Some(h), Some(train), Some(val)) => {
                let h = Hierarchy::load(h)?;
                let train = data::read_examples(train)?;
                let val = data::read_examples(val)?;
                Ok((h, train, val))
            }
            _ => Err(Error::InvalidParameters(
                "hierarchy, train and val must be given together".into(),
            )),
        }
    }
}

/// Writes `contents` next to `path` and renames it into place.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn csv_bytes<F>(fill: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<()>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        fill(&mut w)?;
        w.flush().map_err(|e| Error::Csv(e.into()))?;
    }
    Ok(buf)
}

pub fn depth_histogram_csv(counts: &[u64]) -> Result<Vec<u8>> {
    csv_bytes(|w| {
        w.write_record(["depth", "count"])?;
        for (d, c) in counts.iter().enumerate() {
            w.write_record([d.to_string(), c.to_string()])?;
        }
        Ok(())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradeManifest {
    pub examples: usize,
    pub confused: usize,
    pub imprecise: usize,
    pub model: DepthModel,
    pub inaccuracy: f64,
    pub seed: u64,
    pub depth_counts: Vec<u64>,
}

/// Degrades `train` and writes `out` (JSON-Lines) plus
/// `<out>.depths.csv` and `<out>.manifest.json` beside it.
pub fn run_degrade(
    h: &Hierarchy,
    train: &[LabeledExample],
    model: &DepthModel,
    inaccuracy: f64,
    seed: u64,
    out: &Path,
) -> Result<DegradeManifest> {
    data::require_leaf_labels(h, train)?;
    let degraded = degrade_dataset(h, train, model, inaccuracy, seed)?;
    data::write_jsonl(out, &degraded.examples)?;
    let depth_counts = data::label_depth_counts(h, &degraded.examples)?;
    write_atomic(
        &sidecar(out, "depths.csv"),
        &depth_histogram_csv(&depth_counts)?,
    )?;
    let manifest = DegradeManifest {
        examples: degraded.examples.len(),
        confused: degraded.confused,
        imprecise: degraded.imprecise,
        model: *model,
        inaccuracy,
        seed,
        depth_counts,
    };
    let json = serde_json::to_vec_pretty(&manifest).map_err(|source| Error::Json {
        path: out.to_path_buf(),
        line: 0,
        source,
    })?;
    write_atomic(&sidecar(out, "manifest.json"), &json)?;
    Ok(manifest)
}

pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(suffix);
    path.with_file_name(name)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub method: Method,
    pub seed: u64,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResults {
    pub cells: Vec<CellResult>,
    pub ks: Vec<usize>,
    pub csv: Vec<u8>,
}

/// Arithmetic mean and sample standard deviation (`n - 1`) of the finite
/// values; NaN where undefined.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let xs: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn result_columns(ks: &[usize]) -> Vec<String> {
    let mut cols = vec!["method".to_string(), "seed".to_string()];
    cols.extend(ks.iter().map(|k| format!("top{k}")));
    cols.push("mean_lca_depth".into());
    cols.push("n_mispredicted".into());
    cols
}

fn cell_values(r: &EvalReport, ks: &[usize]) -> Vec<f64> {
    let mut v: Vec<f64> = ks.iter().map(|k| r.topk[k]).collect();
    v.push(r.mean_mispred_lca_depth.unwrap_or(f64::NAN));
    v.push(r.n_mispredicted as f64);
    v
}

/// One row per (method, seed) followed by one `aggregate` row per method
/// whose cells read `mean±std`.
pub fn results_csv(cells: &[CellResult], methods: &[Method], ks: &[usize]) -> Result<Vec<u8>> {
    csv_bytes(|w| {
        w.write_record(result_columns(ks))?;
        for c in cells {
            let mut row = vec![c.method.to_string(), c.seed.to_string()];
            let values = cell_values(&c.report, ks);
            let last = values.len() - 1;
            row.extend(values.iter().enumerate().map(|(i, &v)| {
                if i == last {
                    format!("{v}")
                } else {
                    fmt4(v)
                }
            }));
            w.write_record(row)?;
        }
        for &m in methods {
            let rows: Vec<Vec<f64>> = cells
                .iter()
                .filter(|c| c.method == m)
                .map(|c| cell_values(&c.report, ks))
                .collect();
            let mut row = vec![m.to_string(), "aggregate".to_string()];
            for j in 0..result_columns(ks).len() - 2 {
                let column: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                let (mean, std) = mean_std(&column);
                row.push(format!("{}±{}", fmt4(mean), fmt4(std)));
            }
            w.write_record(row)?;
        }
        Ok(())
    })
}

/// Trains and evaluates every (method, seed) cell on the given data. Each
/// seed degrades the training set once; all methods share that copy.
pub fn run_cells(
    h: &Hierarchy,
    train_set: &[LabeledExample],
    val: &[LabeledExample],
    cfg: &ExperimentConfig,
) -> Result<Vec<CellResult>> {
    cfg.validate()?;
    data::validate(h, train_set)?;
    data::require_leaf_labels(h, val)?;
    let mut ks: Vec<usize> = cfg.ks.clone();
    ks.push(1);
    let mut cells = Vec::new();
    for &seed in &cfg.seeds {
        let degraded = degrade_dataset(h, train_set, &cfg.noise, cfg.inaccuracy, seed)?;
        for &method in &cfg.methods {
            let model = train(
                h,
                &degraded.examples,
                method,
                &cfg.hyper.train_config(seed)?,
            )?;
            let report = evaluate(h, &model, val, &ks)?;
            cells.push(CellResult {
                method,
                seed,
                report,
            });
        }
    }
    // rows grouped by method, seeds in configured order
    cells.sort_by_key(|c| {
        (
            cfg.methods.iter().position(|&m| m == c.method),
            cfg.seeds.iter().position(|&s| s == c.seed),
        )
    });
    Ok(cells)
}

/// Runs the whole experiment and writes `<out>/results.csv`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    cfg.validate()?;
    let (h, train_set, val) = cfg.inputs()?;
    let cells = run_cells(&h, &train_set, &val, cfg)?;
    let mut ks: Vec<usize> = cfg.ks.iter().copied().chain([1]).collect();
    ks.sort_unstable();
    ks.dedup();
    let csv = results_csv(&cells, &cfg.methods, &ks)?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    write_atomic(&cfg.out.join("results.csv"), &csv)?;
    Ok(ExperimentResults { cells, ks, csv })
}

/// Writes `histogram.csv` (field, depth, count) for all fields plus one
/// `histogram_<field>.csv` per field into `out_dir`.
pub fn run_textdepth(
    h: &Hierarchy,
    lexicon: &Lexicon,
    records: &[TextRecord],
    out_dir: &Path,
) -> Result<BTreeMap<String, Vec<u64>>> {
    let hist = depth_histogram(h, lexicon, records);
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let rows = |fields: &mut dyn Iterator<Item = (&String, &Vec<u64>)>| {
        csv_bytes(|w| {
            w.write_record(["field", "depth", "count"])?;
            for (field, counts) in fields {
                for (d, c) in counts.iter().enumerate() {
                    w.write_record([field.clone(), d.to_string(), c.to_string()])?;
                }
            }
            Ok(())
        })
    };
    write_atomic(&out_dir.join("histogram.csv"), &rows(&mut hist.iter())?)?;
    for (field, counts) in &hist {
        let safe: String = field
            .chars()
            .map(|c| {
                if c.is_alphanumeric() || c == '-' || c == '_' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        write_atomic(
            &out_dir.join(format!("histogram_{safe}.csv")),
            &rows(&mut std::iter::once((field, counts)))?,
        )?;
    }
    Ok(hist)
}

/// `step,lr` rows over the whole schedule.
pub fn schedule_dump<W: Write>(s: &SgdrSchedule, out: W) -> Result<()> {
    s.validate()?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "lr"])?;
    for step in 0..s.total_steps {
        w.write_record([step.to_string(), format!("{:e}", s.lr(step)?)])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))
}
