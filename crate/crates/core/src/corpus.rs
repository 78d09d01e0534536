//! Data model, ingestion, canonical preprocessing, splitting, class weighting,
//! and synthetic corpus generation.
//!
//! A canonical name is one or more parts, each wrapped in part markers
//! (`{LETTERS}` with the default config), and a household string joins two
//! canonical names with the separator character: `{RAM}{KUMAR}|{SITA}`.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One religion class. Ids are dense `0..K-1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassLabel {
    pub id: usize,
    pub name: String,
}

/// One labeled observation. `primary_name` and `relative_name` are canonical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameRecord {
    pub primary_name: String,
    pub relative_name: Option<String>,
    pub label: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<NameRecord>,
    pub classes: Vec<ClassLabel>,
    pub provenance: String,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Label ids of all records, in order. Panics if some record is unlabeled.
    pub fn labels(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.label.expect("labeled record")).collect()
    }

    pub fn class_names(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.name.clone()).collect()
    }
}

/// Marker characters of the canonical grammar. The three must be distinct and
/// outside `A-Z`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub part_open: char,
    pub part_close: char,
    pub name_separator: char,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self { part_open: '{', part_close: '}', name_separator: '|' }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        let m = [self.part_open, self.part_close, self.name_separator];
        if m[0] == m[1] || m[0] == m[2] || m[1] == m[2] {
            return Err(Error::Config("marker characters must be distinct".into()));
        }
        if m.iter().any(|c| c.is_ascii_uppercase()) {
            return Err(Error::Config("marker characters must not be in A-Z".into()));
        }
        Ok(())
    }
}

/// Uppercases, strips non-alphabetic characters, and wraps each
/// whitespace-delimited part in the part markers.
///
/// Non-ASCII letters are dropped rather than transliterated; source data is
/// assumed romanized.
pub fn preprocess_name(raw: &str, cfg: &PreprocessConfig) -> Result<String> {
    let mut out = String::with_capacity(raw.len() + 4);
    let mut in_part = false;
    for ch in raw.chars() {
        if ch.is_ascii_alphabetic() {
            if !in_part {
                out.push(cfg.part_open);
                in_part = true;
            }
            out.push(ch.to_ascii_uppercase());
        } else if in_part {
            out.push(cfg.part_close);
            in_part = false;
        }
    }
    if in_part {
        out.push(cfg.part_close);
    }
    if out.is_empty() {
        return Err(Error::EmptyName { row: None });
    }
    Ok(out)
}

/// Joins two canonical names into a household string. Duplicate names are
/// retained.
pub fn concat_names(primary: &str, relative: &str, cfg: &PreprocessConfig) -> String {
    let mut out = String::with_capacity(primary.len() + relative.len() + 1);
    out.push_str(primary);
    out.push(cfg.name_separator);
    out.push_str(relative);
    out
}

/// Splits a canonical name (or household string) into its letter parts,
/// dropping all marker characters.
pub fn name_parts<'a>(canonical: &'a str, cfg: &PreprocessConfig) -> Vec<&'a str> {
    canonical
        .split([cfg.part_open, cfg.part_close, cfg.name_separator])
        .filter(|p| !p.is_empty())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadMode {
    /// One record per row; the relative name is kept as a separate field.
    Single,
    /// Primary and relative names are joined into one household string.
    Concat,
}

impl std::str::FromStr for LoadMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "single" => Ok(LoadMode::Single),
            "concat" => Ok(LoadMode::Concat),
            other => Err(format!("unknown mode {other:?} (expected single|concat)")),
        }
    }
}

/// Loads a `name,relative_name,label` CSV. `relative_name` may be empty;
/// `label` is matched case-insensitively against `classes` when given,
/// otherwise classes are inferred from the file in alphabetical order.
pub fn load_dataset(
    path: &Path,
    mode: LoadMode,
    cfg: &PreprocessConfig,
    classes: Option<&[String]>,
) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    let mut ds = read_dataset(file, mode, cfg, classes)?;
    ds.provenance = path.display().to_string();
    Ok(ds)
}

/// `load_dataset` over any reader; provenance is left empty.
pub fn read_dataset(
    reader: impl Read,
    mode: LoadMode,
    cfg: &PreprocessConfig,
    classes: Option<&[String]>,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols != ["name", "relative_name", "label"] {
        return Err(Error::Schema(format!(
            "expected header name,relative_name,label, found {}",
            cols.join(",")
        )));
    }

    let mut rows: Vec<(String, Option<String>, String)> = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let row = idx + 2; // 1-based, after the header line
        let rec = rec?;
        if rec.len() != 3 {
            return Err(Error::Schema(format!("row {row}: expected 3 columns, found {}", rec.len())));
        }
        let name = preprocess_name(&rec[0], cfg).map_err(|_| Error::EmptyName { row: Some(row) })?;
        let relative = match rec[1].trim() {
            "" => None,
            raw => Some(preprocess_name(raw, cfg).map_err(|_| Error::EmptyName { row: Some(row) })?),
        };
        rows.push((name, relative, rec[2].trim().to_string()));
    }

    let class_names: Vec<String> = match classes {
        Some(c) => c.to_vec(),
        None => {
            let mut seen: Vec<String> = Vec::new();
            for (_, _, label) in &rows {
                if !seen.iter().any(|s| s.eq_ignore_ascii_case(label)) {
                    seen.push(label.clone());
                }
            }
            seen.sort();
            seen
        }
    };
    let class_labels: Vec<ClassLabel> = class_names
        .iter()
        .enumerate()
        .map(|(id, name)| ClassLabel { id, name: name.clone() })
        .collect();

    let mut records = Vec::with_capacity(rows.len());
    for (idx, (name, relative, label)) in rows.into_iter().enumerate() {
        let row = idx + 2;
        let label_id = class_labels
            .iter()
            .find(|c| c.name.eq_ignore_ascii_case(&label))
            .map(|c| c.id)
            .ok_or(Error::Label { label: label.clone(), row })?;
        let (primary, relative) = match mode {
            LoadMode::Single => (name, relative),
            LoadMode::Concat => match relative {
                Some(rel) => (concat_names(&name, &rel, cfg), None),
                None => (name, None),
            },
        };
        records.push(NameRecord { primary_name: primary, relative_name: relative, label: Some(label_id) });
    }

    Ok(Dataset { records, classes: class_labels, provenance: String::new() })
}

/// Adds one extra record per non-empty relative name, carrying the same
/// label. Originals come first, then the augments in source order.
pub fn augment_single(ds: &Dataset) -> Dataset {
    let mut records = ds.records.clone();
    for rec in &ds.records {
        if let Some(rel) = &rec.relative_name {
            records.push(NameRecord {
                primary_name: rel.clone(),
                relative_name: None,
                label: rec.label,
            });
        }
    }
    Dataset { records, classes: ds.classes.clone(), provenance: ds.provenance.clone() }
}

/// Stratified train/val/test split: each class's records are shuffled with
/// the seeded RNG and cut at the ratio boundaries, rounding remainders into
/// the train split. The three outputs are disjoint and their union is the
/// input multiset.
pub fn split_dataset(
    ds: &Dataset,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset)> {
    let (rt, rv, rs) = ratios;
    if rt <= 0.0 || rv <= 0.0 || rs <= 0.0 || (rt + rv + rs - 1.0).abs() > 1e-9 {
        return Err(Error::Ratio([rt, rv, rs]));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts: [Vec<NameRecord>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for class in &ds.classes {
        let mut members: Vec<NameRecord> = ds
            .records
            .iter()
            .filter(|r| r.label == Some(class.id))
            .cloned()
            .collect();
        members.shuffle(&mut rng);
        let n = members.len();
        let n_val = (rv * n as f64).floor() as usize;
        let n_test = (rs * n as f64).floor() as usize;
        let n_train = n - n_val - n_test;
        let mut it = members.into_iter();
        parts[0].extend(it.by_ref().take(n_train));
        parts[1].extend(it.by_ref().take(n_val));
        parts[2].extend(it);
    }
    let [train, val, test] = parts;
    let mk = |records: Vec<NameRecord>, tag: &str| Dataset {
        records,
        classes: ds.classes.clone(),
        provenance: format!("{}#{tag}", ds.provenance),
    };
    Ok((mk(train, "train"), mk(val, "val"), mk(test, "test")))
}

/// Balanced class weights `w_c = N / (K * N_c)`, so that
/// `sum_c w_c * N_c = N`.
pub fn class_weights(labels: &[usize], num_classes: usize) -> Result<Vec<f64>> {
    let mut counts = vec![0usize; num_classes];
    for &l in labels {
        counts[l] += 1;
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::EmptyClass(c));
    }
    let n = labels.len() as f64;
    let k = num_classes as f64;
    Ok(counts.iter().map(|&nc| n / (k * nc as f64)).collect())
}

/// Per-class recipe for the synthetic corpus generator: a letter
/// distribution over `A-Z` plus part-length and part-count ranges.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassProfile {
    pub name: String,
    pub proportion: f64,
    /// Letter probabilities, keyed `"A".."Z"`. Must sum to 1.
    pub letter_weights: BTreeMap<String, f64>,
    /// Inclusive `[min, max]` letters per part.
    pub part_length: [usize; 2],
    /// Inclusive `[min, max]` parts per name.
    pub part_count: [usize; 2],
    /// When true, each record also carries a relative name drawn from the
    /// same profile.
    #[serde(default)]
    pub with_relative: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub classes: Vec<ClassProfile>,
}

impl SyntheticSpec {
    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::BadProfile("no classes".into()));
        }
        let total: f64 = self.classes.iter().map(|c| c.proportion).sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::BadProfile(format!("class proportions sum to {total}, expected 1")));
        }
        for class in &self.classes {
            let sum: f64 = class.letter_weights.values().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::BadProfile(format!(
                    "letter weights of class {:?} sum to {sum}, expected 1",
                    class.name
                )));
            }
            for (key, w) in &class.letter_weights {
                let ok = key.len() == 1 && key.as_bytes()[0].is_ascii_uppercase();
                if !ok {
                    return Err(Error::BadProfile(format!("bad letter key {key:?}")));
                }
                if *w < 0.0 {
                    return Err(Error::BadProfile(format!("negative weight for {key:?}")));
                }
            }
            if class.part_length[0] == 0 || class.part_length[0] > class.part_length[1] {
                return Err(Error::BadProfile(format!("bad part_length for {:?}", class.name)));
            }
            if class.part_count[0] == 0 || class.part_count[0] > class.part_count[1] {
                return Err(Error::BadProfile(format!("bad part_count for {:?}", class.name)));
            }
        }
        Ok(())
    }
}

/// Cumulative-distribution letter sampler.
struct LetterSampler {
    letters: Vec<char>,
    cdf: Vec<f64>,
}

impl LetterSampler {
    fn new(weights: &BTreeMap<String, f64>) -> Self {
        let mut letters = Vec::with_capacity(weights.len());
        let mut cdf = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for (key, w) in weights {
            acc += w;
            letters.push(key.chars().next().unwrap());
            cdf.push(acc);
        }
        Self { letters, cdf }
    }

    fn sample(&self, rng: &mut impl Rng) -> char {
        let u: f64 = rng.gen::<f64>() * self.cdf.last().copied().unwrap_or(1.0);
        let idx = self.cdf.partition_point(|&c| c < u).min(self.letters.len() - 1);
        self.letters[idx]
    }
}

/// Generates a deterministic synthetic dataset. Class counts follow the
/// requested proportions exactly (largest-remainder rounding).
pub fn generate_synthetic(spec: &SyntheticSpec, n: usize, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let cfg = PreprocessConfig::default();
    let counts = exact_counts(&spec.classes.iter().map(|c| c.proportion).collect::<Vec<_>>(), n);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(n);
    for (class_id, class) in spec.classes.iter().enumerate() {
        let sampler = LetterSampler::new(&class.letter_weights);
        for _ in 0..counts[class_id] {
            let primary = sample_name(class, &sampler, &cfg, &mut rng);
            let relative = class.with_relative.then(|| sample_name(class, &sampler, &cfg, &mut rng));
            records.push(NameRecord { primary_name: primary, relative_name: relative, label: Some(class_id) });
        }
    }

    let classes = spec
        .classes
        .iter()
        .enumerate()
        .map(|(id, c)| ClassLabel { id, name: c.name.clone() })
        .collect();
    Ok(Dataset { records, classes, provenance: format!("synthetic(n={n},seed={seed})") })
}

fn sample_name(
    class: &ClassProfile,
    sampler: &LetterSampler,
    cfg: &PreprocessConfig,
    rng: &mut impl Rng,
) -> String {
    let parts = rng.gen_range(class.part_count[0]..=class.part_count[1]);
    let mut name = String::new();
    for _ in 0..parts {
        let len = rng.gen_range(class.part_length[0]..=class.part_length[1]);
        name.push(cfg.part_open);
        for _ in 0..len {
            name.push(sampler.sample(rng));
        }
        name.push(cfg.part_close);
    }
    name
}

/// Integer counts per class summing exactly to `n`, by largest remainder.
fn exact_counts(proportions: &[f64], n: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = proportions.iter().map(|p| (p * n as f64).floor() as usize).collect();
    let mut leftover = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..proportions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = proportions[a] * n as f64 - counts[a] as f64;
        let rb = proportions[b] * n as f64 - counts[b] as f64;
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for idx in order {
        if leftover == 0 {
            break;
        }
        counts[idx] += 1;
        leftover -= 1;
    }
    counts
}
