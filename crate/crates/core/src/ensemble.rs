// SPDX-License-Identifier: Apache-2.0

//! Partition ensembles and the stacked assignment matrix.
//!
//! A partition is an `M_l x N` matrix of group-assignment probabilities
//! (rows are groups, columns are vertices). An ensemble is an ordered list
//! of partitions over the same `N` vertices. Stacking concatenates every
//! partition's rows into one `M0 x N` [`AssignmentMatrix`].

use std::fmt;
use std::fs;
use std::io::Read;
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Slack allowed on per-vertex column sums of a single partition.
pub const COLUMN_SUM_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    name: String,
    assignment: Array2<f64>,
    labels: Option<Vec<usize>>,
}

impl Partition {
    /// Soft partition from an `M_l x N` probability table.
    pub fn soft(name: impl Into<String>, assignment: Array2<f64>) -> Result<Self> {
        let p = Partition {
            name: name.into(),
            assignment,
            labels: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Hard partition from a label vector, expanded to a one-hot matrix.
    ///
    /// The group count defaults to `max(label) + 1`; passing `n_groups`
    /// allows trailing groups that no vertex uses.
    pub fn hard(name: impl Into<String>, labels: Vec<usize>, n_groups: Option<usize>) -> Result<Self> {
        let name = name.into();
        if labels.is_empty() {
            return Err(Error::Validation(format!("partition '{name}': empty label vector")));
        }
        let needed = labels.iter().max().map_or(0, |&m| m + 1);
        let k = n_groups.unwrap_or(needed);
        if k < needed {
            return Err(Error::Validation(format!(
                "partition '{name}': label {} out of range for n_groups = {k}",
                needed - 1
            )));
        }
        let mut assignment = Array2::zeros((k, labels.len()));
        for (i, &g) in labels.iter().enumerate() {
            assignment[[g, i]] = 1.0;
        }
        Ok(Partition {
            name,
            assignment,
            labels: Some(labels),
        })
    }

    fn validate(&self) -> Result<()> {
        let name = &self.name;
        let (m, n) = self.assignment.dim();
        if m == 0 || n == 0 {
            return Err(Error::Validation(format!(
                "partition '{name}': assignment matrix is {m}x{n}; need at least one group and one vertex"
            )));
        }
        for ((g, i), &v) in self.assignment.indexed_iter() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::Validation(format!(
                    "partition '{name}': entry [{g}][{i}] = {v} outside [0,1]"
                )));
            }
        }
        for (i, col) in self.assignment.axis_iter(Axis(1)).enumerate() {
            let s: f64 = col.sum();
            if s > 1.0 + COLUMN_SUM_SLACK {
                return Err(Error::Validation(format!(
                    "partition '{name}': vertex {i} has total assignment {s} > 1"
                )));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_groups(&self) -> usize {
        self.assignment.nrows()
    }

    pub fn n_vertices(&self) -> usize {
        self.assignment.ncols()
    }

    pub fn assignment(&self) -> &Array2<f64> {
        &self.assignment
    }

    /// Label vector, when the partition was given as hard labels.
    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn is_hard(&self) -> bool {
        self.labels.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionEnsemble {
    n_vertices: usize,
    partitions: Vec<Partition>,
    vertex_names: Option<Vec<String>>,
}

impl PartitionEnsemble {
    pub fn new(partitions: Vec<Partition>, vertex_names: Option<Vec<String>>) -> Result<Self> {
        let n = partitions.first().map(Partition::n_vertices).unwrap_or(0);
        Self::with_vertex_count(n, partitions, vertex_names)
    }

    pub fn with_vertex_count(
        n_vertices: usize,
        partitions: Vec<Partition>,
        vertex_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if partitions.is_empty() {
            return Err(Error::Validation("ensemble has an empty partition list".into()));
        }
        let first = &partitions[0];
        for p in &partitions[1..] {
            if p.n_vertices() != first.n_vertices() {
                return Err(Error::Validation(format!(
                    "inconsistent vertex counts: partition '{}' has {} vertices, partition '{}' has {}",
                    first.name(),
                    first.n_vertices(),
                    p.name(),
                    p.n_vertices()
                )));
            }
        }
        if first.n_vertices() != n_vertices {
            return Err(Error::Validation(format!(
                "n_vertices = {n_vertices} but partition '{}' has {} vertices",
                first.name(),
                first.n_vertices()
            )));
        }
        if let Some(names) = &vertex_names {
            if names.len() != n_vertices {
                return Err(Error::Validation(format!(
                    "vertex_names has {} entries, expected {n_vertices}",
                    names.len()
                )));
            }
        }
        Ok(PartitionEnsemble {
            n_vertices,
            partitions,
            vertex_names,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_partitions(&self) -> usize {
        self.partitions.len()
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn partition(&self, name: &str) -> Option<&Partition> {
        self.partitions.iter().find(|p| p.name() == name)
    }

    pub fn vertex_names(&self) -> Option<&[String]> {
        self.vertex_names.as_deref()
    }

    /// Total number of groups over all partitions (`M0`).
    pub fn total_groups(&self) -> usize {
        self.partitions.iter().map(Partition::n_groups).sum()
    }

    /// Stack every partition's rows into one matrix, partition order then
    /// local group order. All-zero rows are dropped and reported.
    pub fn stack(&self) -> Stacked {
        stack_partitions(self.n_vertices, &self.partitions)
    }

    /// Sub-ensemble holding only the named partition.
    pub fn select(&self, name: &str) -> Result<PartitionEnsemble> {
        let p = self
            .partition(name)
            .ok_or_else(|| Error::Validation(format!("no partition named '{name}'")))?;
        PartitionEnsemble::with_vertex_count(self.n_vertices, vec![p.clone()], self.vertex_names.clone())
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn content_hash(&self) -> String {
        let bytes = self.to_json_string();
        hex::encode(Sha256::digest(bytes.as_bytes()))
    }

    pub fn from_json_reader<R: Read>(reader: R) -> Result<Self> {
        let doc: EnsembleDoc = serde_json::from_reader(reader)?;
        doc.into_ensemble()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: EnsembleDoc = serde_json::from_str(s)?;
        doc.into_ensemble()
    }

    /// Canonical JSON encoding; hard partitions are written as labels.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&EnsembleDoc::from(self)).expect("ensemble serializes")
    }

    /// Read a directory of `<partition name>.csv` files, one group per row.
    /// Partitions are ordered by file name.
    pub fn from_csv_dir(dir: &Path) -> Result<Self> {
        let mut files: Vec<_> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        let mut partitions = Vec::with_capacity(files.len());
        for path in files {
            let name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::Parse(format!("non-UTF-8 file name {}", path.display())))?
                .to_owned();
            let matrix = read_csv_matrix(&path, &name)?;
            partitions.push(Partition::soft(name, matrix)?);
        }
        PartitionEnsemble::new(partitions, None)
    }

    pub fn write_csv_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for p in &self.partitions {
            if p.name().is_empty() || p.name().contains(['/', '\\']) {
                return Err(Error::Validation(format!(
                    "partition name '{}' is not usable as a file name",
                    p.name()
                )));
            }
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_path(dir.join(format!("{}.csv", p.name())))
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
            for row in p.assignment().rows() {
                w.write_record(row.iter().map(f64::to_string))
                    .map_err(|e| Error::Io(std::io::Error::other(e)))?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

fn read_csv_matrix(path: &Path, name: &str) -> Result<Array2<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse(format!("partition '{name}': {e}")))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("partition '{name}': row {r}: {e}")))?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, s)| {
                s.parse::<f64>().map_err(|e| {
                    Error::Parse(format!("partition '{name}': row {r}, column {c}: '{s}': {e}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    rows_to_matrix(rows, name)
}

fn rows_to_matrix(rows: Vec<Vec<f64>>, name: &str) -> Result<Array2<f64>> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != n) {
        return Err(Error::Parse(format!(
            "partition '{name}': row {r} has {} columns, expected {n}",
            row.len()
        )));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((m, n), flat).map_err(|e| Error::Parse(format!("partition '{name}': {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum PartitionKind {
    Soft,
    Hard,
}

#[derive(Debug, Serialize, Deserialize)]
struct PartitionDoc {
    name: String,
    kind: PartitionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    assignment: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_groups: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EnsembleDoc {
    n_vertices: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vertex_names: Option<Vec<String>>,
    partitions: Vec<PartitionDoc>,
}

impl EnsembleDoc {
    fn into_ensemble(self) -> Result<PartitionEnsemble> {
        let mut partitions = Vec::with_capacity(self.partitions.len());
        for p in self.partitions {
            let part = match p.kind {
                PartitionKind::Soft => {
                    let rows = p.assignment.ok_or_else(|| {
                        Error::Validation(format!("partition '{}': soft partition without 'assignment'", p.name))
                    })?;
                    let m = rows_to_matrix(rows, &p.name).map_err(|e| match e {
                        Error::Parse(s) => Error::Validation(s),
                        other => other,
                    })?;
                    Partition::soft(p.name, m)?
                }
                PartitionKind::Hard => {
                    let raw = p.labels.ok_or_else(|| {
                        Error::Validation(format!("partition '{}': hard partition without 'labels'", p.name))
                    })?;
                    let mut labels = Vec::with_capacity(raw.len());
                    for (i, l) in raw.into_iter().enumerate() {
                        let l = usize::try_from(l).map_err(|_| {
                            Error::Validation(format!("partition '{}': label {l} at vertex {i} is negative", p.name))
                        })?;
                        labels.push(l);
                    }
                    Partition::hard(p.name, labels, p.n_groups)?
                }
            };
            partitions.push(part);
        }
        PartitionEnsemble::with_vertex_count(self.n_vertices, partitions, self.vertex_names)
    }
}

impl From<&PartitionEnsemble> for EnsembleDoc {
    fn from(e: &PartitionEnsemble) -> Self {
        let partitions = e
            .partitions
            .iter()
            .map(|p| match p.labels() {
                Some(labels) => PartitionDoc {
                    name: p.name.clone(),
                    kind: PartitionKind::Hard,
                    assignment: None,
                    labels: Some(labels.iter().map(|&l| l as i64).collect()),
                    n_groups: Some(p.n_groups()),
                },
                None => PartitionDoc {
                    name: p.name.clone(),
                    kind: PartitionKind::Soft,
                    assignment: Some(p.assignment.rows().into_iter().map(|r| r.to_vec()).collect()),
                    labels: None,
                    n_groups: None,
                },
            })
            .collect();
        EnsembleDoc {
            n_vertices: e.n_vertices,
            vertex_names: e.vertex_names.clone(),
            partitions,
        }
    }
}

/// Provenance of a stacked row.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupLabel {
    pub partition: String,
    pub local: usize,
}

impl fmt::Display for GroupLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.partition, self.local)
    }
}

/// `M x N` matrix of assignment probabilities with row provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentMatrix {
    entries: Array2<f64>,
    labels: Vec<GroupLabel>,
}

impl AssignmentMatrix {
    pub fn new(entries: Array2<f64>, labels: Vec<GroupLabel>) -> Result<Self> {
        if entries.nrows() != labels.len() {
            return Err(Error::Validation(format!(
                "{} rows but {} group labels",
                entries.nrows(),
                labels.len()
            )));
        }
        if let Some(((g, i), v)) = entries
            .indexed_iter()
            .find(|(_, v)| !v.is_finite() || !(0.0..=1.0).contains(*v))
        {
            return Err(Error::Validation(format!("entry [{g}][{i}] = {v} outside [0,1]")));
        }
        Ok(AssignmentMatrix { entries, labels })
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn labels(&self) -> &[GroupLabel] {
        &self.labels
    }

    pub fn n_groups(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_vertices(&self) -> usize {
        self.entries.ncols()
    }

    pub fn row(&self, g: usize) -> ArrayView1<'_, f64> {
        self.entries.row(g)
    }

    /// Total assignment mass `sum_i p_{g,i}` of each row.
    pub fn row_masses(&self) -> Vec<f64> {
        self.entries.rows().into_iter().map(|r| r.sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.entries.axis_iter(Axis(1)).map(|c| c.sum()).collect()
    }

    /// Matrix holding only the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> AssignmentMatrix {
        AssignmentMatrix {
            entries: self.entries.select(Axis(0), rows),
            labels: rows.iter().map(|&g| self.labels[g].clone()).collect(),
        }
    }

    pub(crate) fn with_entries(&self, entries: Array2<f64>) -> AssignmentMatrix {
        AssignmentMatrix {
            entries,
            labels: self.labels.clone(),
        }
    }
}

/// Stacking result: the combined matrix plus groups dropped for being empty.
#[derive(Debug, Clone)]
pub struct Stacked {
    pub matrix: AssignmentMatrix,
    pub dropped: Vec<GroupLabel>,
}

fn stack_partitions(n: usize, partitions: &[Partition]) -> Stacked {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut dropped = Vec::new();
    for p in partitions {
        for (g, row) in p.assignment().rows().into_iter().enumerate() {
            let label = GroupLabel {
                partition: p.name().to_owned(),
                local: g,
            };
            if row.iter().all(|&v| v == 0.0) {
                log::warn!("dropping empty group {label}");
                dropped.push(label);
                continue;
            }
            rows.extend(row.iter().copied());
            labels.push(label);
        }
    }
    let entries = Array2::from_shape_vec((labels.len(), n), rows).expect("rows share N");
    Stacked {
        matrix: AssignmentMatrix { entries, labels },
        dropped,
    }
}

/// Row `g` normalized to a probability distribution over vertices.
pub fn row_distribution(m: &AssignmentMatrix, g: usize) -> Result<Vec<f64>> {
    normalize(m.row(g)).ok_or(Error::EmptyGroup { group: g })
}

pub(crate) fn normalize(row: ArrayView1<'_, f64>) -> Option<Vec<f64>> {
    let s: f64 = row.sum();
    if s > 0.0 {
        Some(row.iter().map(|v| v / s).collect())
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleFormat {
    Json,
    CsvDir,
}

impl EnsembleFormat {
    /// Directories are read as CSV directories, everything else as JSON.
    /// Directories, and missing paths without an extension, are CSV directories.
    pub fn detect(path: &Path) -> Self {
        if path.is_dir() || (!path.exists() && path.extension().is_none()) {
            EnsembleFormat::CsvDir
        } else {
            EnsembleFormat::Json
        }
    }
}

pub fn load_ensemble(path: &Path, format: EnsembleFormat) -> Result<PartitionEnsemble> {
    match format {
        EnsembleFormat::Json => PartitionEnsemble::from_json_reader(std::io::BufReader::new(fs::File::open(path)?)),
        EnsembleFormat::CsvDir => PartitionEnsemble::from_csv_dir(path),
    }
}

pub fn save_ensemble(e: &PartitionEnsemble, path: &Path, format: EnsembleFormat) -> Result<()> {
    match format {
        EnsembleFormat::Json => Ok(fs::write(path, e.to_json_string())?),
        EnsembleFormat::CsvDir => e.write_csv_dir(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn two_partition_json() -> &'static str {
        r#"{"n_vertices": 4, "partitions": [
            {"name": "hard", "kind": "hard", "labels": [0, 0, 1, 1]},
            {"name": "soft", "kind": "soft", "assignment": [[0.5, 0.5, 0.0, 0.25], [0.5, 0.5, 1.0, 0.75]]}
        ]}"#
    }

    #[test]
    fn hard_labels_expand_to_one_hot() {
        let e = PartitionEnsemble::from_json_str(two_partition_json()).unwrap();
        assert_eq!(e.n_partitions(), 2);
        let hard = &e.partitions()[0];
        assert_eq!(hard.assignment(), &array![[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]]);
        assert!(hard.is_hard());
    }

    #[test]
    fn mismatched_vertex_counts_name_both_partitions() {
        let json = r#"{"n_vertices": 4, "partitions": [
            {"name": "alpha", "kind": "hard", "labels": [0, 0, 1, 1]},
            {"name": "beta", "kind": "hard", "labels": [0, 0, 1, 1, 1]}
        ]}"#;
        let msg = PartitionEnsemble::from_json_str(json).unwrap_err().to_string();
        assert!(msg.contains("alpha") && msg.contains("beta"), "{msg}");
    }

    #[test]
    fn rejects_bad_entries_and_empty_lists() {
        let out_of_range = r#"{"n_vertices": 2, "partitions": [
            {"name": "p", "kind": "soft", "assignment": [[0.5, 1.5]]}]}"#;
        let msg = PartitionEnsemble::from_json_str(out_of_range).unwrap_err().to_string();
        assert!(msg.contains("'p'") && msg.contains("[0][1]"), "{msg}");

        let empty = r#"{"n_vertices": 2, "partitions": []}"#;
        assert!(matches!(PartitionEnsemble::from_json_str(empty), Err(Error::Validation(_))));

        let garbage = "{not json";
        assert!(matches!(PartitionEnsemble::from_json_str(garbage), Err(Error::Parse(_))));

        let oversum = r#"{"n_vertices": 1, "partitions": [
            {"name": "q", "kind": "soft", "assignment": [[0.6], [0.6]]}]}"#;
        assert!(PartitionEnsemble::from_json_str(oversum).is_err());

        let negative = r#"{"n_vertices": 2, "partitions": [{"name": "h", "kind": "hard", "labels": [0, -1]}]}"#;
        assert!(PartitionEnsemble::from_json_str(negative).is_err());
    }

    #[test]
    fn undernormalized_soft_columns_are_kept() {
        let p = Partition::soft("s", array![[0.2, 0.0], [0.3, 0.1]]).unwrap();
        assert_eq!(p.assignment()[[0, 0]], 0.2);
    }

    #[test]
    fn stacking_counts_and_provenance() {
        let a = Partition::soft("a", Array2::from_elem((3, 5), 0.2)).unwrap();
        let b = Partition::soft("b", Array2::from_elem((4, 5), 0.1)).unwrap();
        let e = PartitionEnsemble::new(vec![a, b], None).unwrap();
        let s = e.stack();
        assert_eq!(s.matrix.n_groups(), 7);
        assert_eq!(s.matrix.labels()[3], GroupLabel { partition: "b".into(), local: 0 });
        assert!(s.dropped.is_empty());
    }

    #[test]
    fn identical_copies_repeat_rows() {
        let base = Partition::hard("x", vec![0, 1, 2, 0, 1, 2, 2], None).unwrap();
        let parts = (0..4)
            .map(|l| Partition::hard(format!("c{l}"), base.labels().unwrap().to_vec(), None).unwrap())
            .collect();
        let s = PartitionEnsemble::new(parts, None).unwrap().stack();
        assert_eq!(s.matrix.n_groups(), 12);
        for g in 0..3 {
            for c in 1..4 {
                assert_eq!(s.matrix.row(g), s.matrix.row(g + 3 * c));
            }
        }
        assert!(s.matrix.column_sums().iter().all(|&c| c == 4.0));
    }

    #[test]
    fn empty_groups_are_dropped_at_stacking() {
        let p = Partition::hard("h", vec![0, 0, 2, 2], None).unwrap();
        let s = PartitionEnsemble::new(vec![p], None).unwrap().stack();
        assert_eq!(s.matrix.n_groups(), 2);
        assert_eq!(s.dropped, vec![GroupLabel { partition: "h".into(), local: 1 }]);
    }

    #[test]
    fn row_distribution_normalizes() {
        let m = AssignmentMatrix::new(
            array![[1.0, 0.5, 0.5], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]],
            (0..3).map(|g| GroupLabel { partition: "p".into(), local: g }).collect(),
        )
        .unwrap();
        assert_eq!(row_distribution(&m, 0).unwrap(), vec![0.5, 0.25, 0.25]);
        assert_eq!(row_distribution(&m, 1).unwrap(), vec![0.0, 1.0, 0.0]);
        assert!(matches!(row_distribution(&m, 2), Err(Error::EmptyGroup { group: 2 })));
    }

    #[test]
    fn json_encoding_is_stable_and_hash_idempotent() {
        let e = PartitionEnsemble::from_json_str(two_partition_json()).unwrap();
        let again = PartitionEnsemble::from_json_str(&e.to_json_string()).unwrap();
        assert_eq!(e, again);
        assert_eq!(e.content_hash(), again.content_hash());
        assert_eq!(e.content_hash().len(), 64);
    }
}
