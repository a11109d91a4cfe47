//! Writes a planted instance to a directory.

use std::fs;
use std::path::{Path, PathBuf};

use abduction_core::synth::{plant, MaskedSample, PlantConfig, PlantedInstance, SynthError};
use abduction_core::{Dataset, MaskProcess};
use thiserror::Error;

use crate::io::{write_dataset, DatasetFormat, IoError};
use crate::report::{Manifest, Provenance};

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("m must be at least 1")]
    NoRows,
    #[error(transparent)]
    Io(#[from] IoError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerateConfig {
    pub plant: PlantConfig,
    pub mask: MaskProcess,
    pub m: usize,
    pub holdout_m: usize,
    pub seed: u64,
    pub format: DatasetFormat,
    /// Also write the full assignments behind each masked row.
    pub sidecar: bool,
}

/// In-memory result of a generation run, before anything touches disk.
pub struct Generated {
    pub instance: PlantedInstance,
    pub train: MaskedSample,
    pub holdout: Option<MaskedSample>,
    pub manifest: Manifest,
}

fn ext(format: DatasetFormat) -> &'static str {
    match format {
        DatasetFormat::Csv => "csv",
        DatasetFormat::Jsonl => "jsonl",
    }
}

pub fn generate(cfg: &GenerateConfig) -> Result<Generated, GenerateError> {
    if cfg.m == 0 {
        return Err(GenerateError::NoRows);
    }
    let instance = plant(&cfg.plant, cfg.seed)?;
    let sample_seed = cfg.seed.wrapping_add(1);
    let holdout_seed = cfg.seed.wrapping_add(2);
    let train = instance.sample_masked(cfg.m, &cfg.mask, sample_seed)?;
    let holdout = match cfg.holdout_m {
        0 => None,
        m => Some(instance.sample_masked(m, &cfg.mask, holdout_seed)?),
    };
    let e = ext(cfg.format);
    let mut files = vec![format!("dataset.{e}"), "kb.txt".into(), "query.txt".into(), "manifest.json".into()];
    if holdout.is_some() {
        files.push(format!("holdout.{e}"));
    }
    if cfg.sidecar {
        files.push(format!("truth.{e}"));
        if holdout.is_some() {
            files.push(format!("holdout_truth.{e}"));
        }
    }
    let manifest = Manifest {
        provenance: Provenance::new(cfg.seed),
        generator: "planted r-term k-DNF with noisy output attribute (synthetic)".into(),
        plant: cfg.plant.clone(),
        mask: cfg.mask.clone(),
        m: cfg.m,
        sample_seed,
        holdout_m: cfg.holdout_m,
        holdout_seed,
        h_star: instance.h_star.to_string(),
        query: instance.c.to_string(),
        output_attr: instance.output_attr,
        proxies: instance.proxies.clone(),
        kb_clauses: instance.kb.clauses().len(),
        files,
    };
    Ok(Generated { instance, train, holdout, manifest })
}

fn truth_dataset(s: &MaskedSample) -> Dataset {
    let rows = s.truth.iter().map(|g| abduction_core::PartialExample::from_bools(&g.assignment)).collect();
    Dataset::new(s.dataset.n(), Some(s.dataset.attribute_names().to_vec()), rows).expect("same shape as the masked rows")
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    fs::write(path, bytes).map_err(|source| IoError::File { path: path.to_path_buf(), source })
}

fn dataset_bytes(d: &Dataset, format: DatasetFormat) -> Vec<u8> {
    let mut out = Vec::new();
    write_dataset(&mut out, d, format).expect("writing to memory");
    out
}

/// Writes every file listed in the manifest and returns their paths.
pub fn write_generated(out: &Path, cfg: &GenerateConfig, g: &Generated) -> Result<Vec<PathBuf>, IoError> {
    fs::create_dir_all(out).map_err(|source| IoError::File { path: out.to_path_buf(), source })?;
    let e = ext(cfg.format);
    let mut contents: Vec<(String, Vec<u8>)> = vec![
        (format!("dataset.{e}"), dataset_bytes(&g.train.dataset, cfg.format)),
        ("kb.txt".into(), g.instance.kb.to_string().into_bytes()),
        ("query.txt".into(), format!("{}\n", g.instance.c).into_bytes()),
        ("manifest.json".into(), {
            let mut s = serde_json::to_vec_pretty(&g.manifest).expect("manifest serializes");
            s.push(b'\n');
            s
        }),
    ];
    if let Some(h) = &g.holdout {
        contents.push((format!("holdout.{e}"), dataset_bytes(&h.dataset, cfg.format)));
    }
    if cfg.sidecar {
        contents.push((format!("truth.{e}"), dataset_bytes(&truth_dataset(&g.train), cfg.format)));
        if let Some(h) = &g.holdout {
            contents.push((format!("holdout_truth.{e}"), dataset_bytes(&truth_dataset(h), cfg.format)));
        }
    }
    let mut paths = Vec::new();
    for (name, bytes) in contents {
        let p = out.join(name);
        write(&p, &bytes)?;
        paths.push(p);
    }
    Ok(paths)
}
