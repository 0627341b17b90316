//! LETOR / SVMlight text datasets.
//!
//! ```text
//! # cof-dataset v1
//! # mask: 1,2
//! # normalized: false
//! 1 qid:0 1:0 2:0 3:3 4:1.94591 ... 12:2 # n0042
//! ```
//!
//! Values are written with six significant digits, rows ordered by
//! (query id, doc id).

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::features::{FeatureMask, FeatureVector, Instance, FEATURE_COUNT};

pub const DATASET_MAGIC: &str = "cof-dataset v1";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetHeader {
    pub mask: FeatureMask,
    pub normalized: bool,
    /// Free-form provenance entries, written as `# key: value`.
    pub provenance: Vec<(String, String)>,
}

impl DatasetHeader {
    pub fn with_mask(mask: FeatureMask) -> Self {
        Self {
            mask,
            ..Self::default()
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.provenance.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.provenance.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.provenance.push((key.to_string(), value)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryGroup {
    pub query_id: u32,
    pub instances: Vec<Instance>,
}

impl QueryGroup {
    pub fn labels(&self) -> Vec<u8> {
        self.instances.iter().map(|i| i.label).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub header: DatasetHeader,
    groups: Vec<QueryGroup>,
}

impl Dataset {
    /// Groups instances by query and sorts each group by doc id.
    pub fn from_instances(instances: Vec<Instance>, header: DatasetHeader) -> Self {
        let mut by_query: BTreeMap<u32, Vec<Instance>> = BTreeMap::new();
        for inst in instances {
            by_query.entry(inst.query_id).or_default().push(inst);
        }
        let groups = by_query
            .into_iter()
            .map(|(query_id, mut instances)| {
                instances.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
                QueryGroup { query_id, instances }
            })
            .collect();
        Self { header, groups }
    }

    pub fn groups(&self) -> &[QueryGroup] {
        &self.groups
    }

    pub fn query_ids(&self) -> Vec<u32> {
        self.groups.iter().map(|g| g.query_id).collect()
    }

    pub fn instances(&self) -> impl Iterator<Item = &Instance> {
        self.groups.iter().flat_map(|g| g.instances.iter())
    }

    pub fn len(&self) -> usize {
        self.groups.iter().map(|g| g.instances.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Keeps only the listed queries; the header is copied.
    pub fn subset(&self, query_ids: &std::collections::BTreeSet<u32>) -> Dataset {
        Dataset {
            header: self.header.clone(),
            groups: self
                .groups
                .iter()
                .filter(|g| query_ids.contains(&g.query_id))
                .cloned()
                .collect(),
        }
    }
}

/// Six significant digits, shortest decimal rendering of the rounded value.
pub fn format_value(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_finite() { "0".into() } else { v.to_string() };
    }
    let rounded: f64 = format!("{v:.5e}").parse().expect("float renders");
    rounded.to_string()
}

pub fn write<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    writeln!(out, "# {DATASET_MAGIC}")?;
    writeln!(out, "# mask: {}", dataset.header.mask)?;
    writeln!(out, "# normalized: {}", dataset.header.normalized)?;
    for (k, v) in &dataset.header.provenance {
        writeln!(out, "# {k}: {v}")?;
    }
    for inst in dataset.instances() {
        write!(out, "{} qid:{}", inst.label, inst.query_id)?;
        for (i, v) in inst.features.0.iter().enumerate() {
            write!(out, " {}:{}", i + 1, format_value(*v))?;
        }
        writeln!(out, " # {}", inst.doc_id)?;
    }
    Ok(())
}

fn parse_row(line: &str, lineno: usize) -> Result<Instance> {
    let (data, comment) = match line.split_once('#') {
        Some((d, c)) => (d, c.trim()),
        None => (line, ""),
    };
    let mut fields = data.split_whitespace();
    let label = fields
        .next()
        .ok_or_else(|| Error::parse(lineno, "missing label"))?
        .parse::<f64>()
        .map_err(|_| Error::parse(lineno, "label is not a number"))?;
    if !((0.0..=255.0).contains(&label) && label.fract() == 0.0) {
        return Err(Error::parse(
            lineno,
            format!("label {label} is not a small nonnegative integer"),
        ));
    }
    let qid = fields
        .next()
        .and_then(|f| f.strip_prefix("qid:"))
        .ok_or_else(|| Error::parse(lineno, "missing qid:<n>"))?
        .parse::<u32>()
        .map_err(|_| Error::parse(lineno, "qid is not a nonnegative integer"))?;
    let mut values = [0.0; FEATURE_COUNT];
    let mut count = 0;
    for field in fields {
        let (idx, val) = field
            .split_once(':')
            .ok_or_else(|| Error::parse(lineno, format!("bad feature `{field}`")))?;
        let idx: usize = idx
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad feature index `{idx}`")))?;
        if idx != count + 1 || idx > FEATURE_COUNT {
            return Err(Error::parse(
                lineno,
                format!(
                    "feature indices must run 1..{FEATURE_COUNT} contiguously, found {idx} at position {}",
                    count + 1
                ),
            ));
        }
        values[count] = val
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad feature value `{val}`")))?;
        count += 1;
    }
    if count != FEATURE_COUNT {
        return Err(Error::parse(
            lineno,
            format!("expected {FEATURE_COUNT} features, found {count}"),
        ));
    }
    let doc_id = if comment.is_empty() {
        format!("row{lineno}")
    } else {
        comment.split_whitespace().next().unwrap_or_default().to_string()
    };
    Ok(Instance {
        query_id: qid,
        doc_id,
        label: label as u8,
        features: FeatureVector(values),
    })
}

pub fn read<R: BufRead>(source: R) -> Result<Dataset> {
    let mut header = DatasetHeader::default();
    let mut instances = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            let comment = comment.trim();
            if comment == DATASET_MAGIC {
                continue;
            }
            if let Some((key, value)) = comment.split_once(':') {
                let value = value.trim();
                match key.trim() {
                    "mask" => header.mask = value.parse().map_err(|e| Error::parse(lineno, format!("{e}")))?,
                    "normalized" => header.normalized = value == "true",
                    key => header.set(key, value),
                }
            }
            continue;
        }
        instances.push(parse_row(trimmed, lineno)?);
    }
    Ok(Dataset::from_instances(instances, header))
}

/// Min-max scales every feature to [0, 1] inside each query group.
/// Features constant within a group become 0.
pub fn normalize_per_query(dataset: &Dataset) -> Dataset {
    let groups = dataset
        .groups
        .iter()
        .map(|g| {
            let mut lo = [f64::INFINITY; FEATURE_COUNT];
            let mut hi = [f64::NEG_INFINITY; FEATURE_COUNT];
            for inst in &g.instances {
                for (f, &v) in inst.features.0.iter().enumerate() {
                    lo[f] = lo[f].min(v);
                    hi[f] = hi[f].max(v);
                }
            }
            let instances = g
                .instances
                .iter()
                .map(|inst| {
                    let mut v = inst.features.0;
                    for f in 0..FEATURE_COUNT {
                        let range = hi[f] - lo[f];
                        v[f] = if range > 0.0 { (v[f] - lo[f]) / range } else { 0.0 };
                    }
                    Instance {
                        features: FeatureVector(v),
                        ..inst.clone()
                    }
                })
                .collect();
            QueryGroup {
                query_id: g.query_id,
                instances,
            }
        })
        .collect();
    let mut header = dataset.header.clone();
    header.normalized = true;
    Dataset { header, groups }
}
