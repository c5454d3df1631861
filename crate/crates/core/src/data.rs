//! Embeddings, labels, multi-view sets and positive pairs, plus the plain-text
//! file formats used to move them between tools.
//!
//! All four formats share one layout: a magic line, a `key=value` shape line,
//! then one row per line. Floats are written with 9 significant digits in
//! scientific notation, which makes `save(load(f))` byte-identical for any
//! file this module wrote.
//!
//! ```text
//! EMB v1              VIEWS v1               LAB v1
//! n=2 dim=3           n=2 c=3 dim=2          n=3 k=2
//! 1.00000000e0 ...    <n*c rows, anchor      0
//! ...                  major>                1
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Tolerance for the unit-norm invariant after [`normalize`].
pub const UNIT_NORM_TOL: f64 = 1e-6;

/// `n x dim` row-major matrix of features, one row per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSet {
    n: usize,
    dim: usize,
    values: Vec<f64>,
    normalized: bool,
}

impl EmbeddingSet {
    pub fn new(n: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        check_matrix(n, dim, &values)?;
        Ok(Self {
            n,
            dim,
            values,
            normalized: false,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::Shape(format!(
                    "row {i} has {} columns, expected {dim}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), dim, values)
    }

    /// Wraps rows that the caller guarantees are unit-norm (e.g. encoder
    /// outputs). The flag is only set if the check actually passes.
    pub fn from_unit_rows(n: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        let mut e = Self::new(n, dim, values)?;
        let unit = e.rows().all(|r| (norm(r) - 1.0).abs() <= UNIT_NORM_TOL);
        e.normalized = unit;
        Ok(e)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    /// Rows `idx` in order, as a new set. The normalized flag carries over.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            if i >= self.n {
                return Err(Error::Argument(format!("row index {i} out of range")));
            }
            values.extend_from_slice(self.row(i));
        }
        let mut e = Self::new(idx.len(), self.dim, values)?;
        e.normalized = self.normalized;
        Ok(e)
    }

    pub fn normalize(&self) -> Result<Self> {
        normalize(self)
    }

    pub(crate) fn require_normalized(&self, what: &str) -> Result<()> {
        if self.normalized {
            Ok(())
        } else {
            Err(Error::Argument(format!("{what} must be normalized first")))
        }
    }
}

/// Divides every row by its Euclidean norm.
pub fn normalize(e: &EmbeddingSet) -> Result<EmbeddingSet> {
    let mut values = e.values.clone();
    for (i, row) in values.chunks_exact_mut(e.dim).enumerate() {
        let len = norm(row);
        if len == 0.0 {
            return Err(Error::Degenerate(format!("row {i} has zero norm")));
        }
        row.iter_mut().for_each(|v| *v /= len);
    }
    Ok(EmbeddingSet {
        n: e.n,
        dim: e.dim,
        values,
        normalized: true,
    })
}

/// One class index in `[0, k)` per sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelSet {
    k: usize,
    labels: Vec<usize>,
}

impl LabelSet {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Argument("label set is empty".into()));
        }
        if k == 0 {
            return Err(Error::Argument("k must be at least 1".into()));
        }
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= k) {
            return Err(Error::Argument(format!(
                "label {y} at index {i} is outside [0, {k})"
            )));
        }
        Ok(Self { k, labels })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn get(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Sample indices grouped by class.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k];
        for (i, &y) in self.labels.iter().enumerate() {
            groups[y].push(i);
        }
        groups
    }

    pub(crate) fn require_nonempty_classes(&self) -> Result<()> {
        match self.class_counts().iter().position(|&c| c == 0) {
            Some(k) => Err(Error::Degenerate(format!("class {k} has no samples"))),
            None => Ok(()),
        }
    }
}

/// `n` anchors with `c` views each, stored anchor-major: rows
/// `i*c .. (i+1)*c` are the views of anchor `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewSet {
    n: usize,
    c: usize,
    dim: usize,
    values: Vec<f64>,
    normalized: bool,
}

impl ViewSet {
    pub fn new(n: usize, c: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if c == 0 {
            return Err(Error::Argument("views per anchor must be at least 1".into()));
        }
        check_matrix(n * c, dim, &values)?;
        Ok(Self {
            n,
            c,
            dim,
            values,
            normalized: false,
        })
    }

    pub fn from_unit_rows(n: usize, c: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        let mut v = Self::new(n, c, dim, values)?;
        let unit = v
            .values
            .chunks_exact(dim)
            .all(|r| (norm(r) - 1.0).abs() <= UNIT_NORM_TOL);
        v.normalized = unit;
        Ok(v)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn view(&self, anchor: usize, j: usize) -> &[f64] {
        let start = (anchor * self.c + j) * self.dim;
        &self.values[start..start + self.dim]
    }

    /// All views of one anchor, `c * dim` contiguous values.
    pub fn anchor(&self, anchor: usize) -> &[f64] {
        let w = self.c * self.dim;
        &self.values[anchor * w..(anchor + 1) * w]
    }

    /// The `n * c` views as a flat embedding set (anchor-major).
    pub fn flatten(&self) -> EmbeddingSet {
        EmbeddingSet {
            n: self.n * self.c,
            dim: self.dim,
            values: self.values.clone(),
            normalized: self.normalized,
        }
    }

    pub fn normalize(&self) -> Result<Self> {
        let flat = normalize(&self.flatten())?;
        Ok(Self {
            n: self.n,
            c: self.c,
            dim: self.dim,
            values: flat.values,
            normalized: true,
        })
    }
}

/// Row `i` of `left` and row `i` of `right` form the positive pair
/// `(x_i, x_i+)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PositivePairs {
    pub left: EmbeddingSet,
    pub right: EmbeddingSet,
    pub left_labels: Option<LabelSet>,
    pub right_labels: Option<LabelSet>,
}

impl PositivePairs {
    pub fn new(left: EmbeddingSet, right: EmbeddingSet) -> Result<Self> {
        if left.n() != right.n() || left.dim() != right.dim() {
            return Err(Error::Shape(format!(
                "pair sides differ: {}x{} vs {}x{}",
                left.n(),
                left.dim(),
                right.n(),
                right.dim()
            )));
        }
        Ok(Self {
            left,
            right,
            left_labels: None,
            right_labels: None,
        })
    }

    pub fn with_labels(mut self, left: LabelSet, right: LabelSet) -> Result<Self> {
        if left.n() != self.n() || right.n() != self.n() {
            return Err(Error::Shape(format!(
                "{} pairs but {} / {} labels",
                self.n(),
                left.n(),
                right.n()
            )));
        }
        self.left_labels = Some(left);
        self.right_labels = Some(right);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.left.n()
    }

    pub fn dim(&self) -> usize {
        self.left.dim()
    }

    pub fn is_normalized(&self) -> bool {
        self.left.is_normalized() && self.right.is_normalized()
    }

    pub fn normalize(&self) -> Result<Self> {
        Ok(Self {
            left: self.left.normalize()?,
            right: self.right.normalize()?,
            left_labels: self.left_labels.clone(),
            right_labels: self.right_labels.clone(),
        })
    }

    pub fn labels(&self) -> Result<(&LabelSet, &LabelSet)> {
        match (&self.left_labels, &self.right_labels) {
            (Some(l), Some(r)) => Ok((l, r)),
            _ => Err(Error::Argument("positive pairs carry no labels".into())),
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_matrix(rows: usize, dim: usize, values: &[f64]) -> Result<()> {
    if rows == 0 || dim == 0 {
        return Err(Error::Argument(format!(
            "matrix must be non-empty, got {rows}x{dim}"
        )));
    }
    if values.len() != rows * dim {
        return Err(Error::Shape(format!(
            "{} values for a {rows}x{dim} matrix",
            values.len()
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Argument(format!(
            "non-finite value in row {}",
            i / dim
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// text formats

/// Canonical float rendering: 9 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.8e}")
}

struct Lines<'a> {
    lines: Vec<&'a str>,
    next: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let mut lines: Vec<&str> = text.split('\n').collect();
        while lines.last().is_some_and(|l| l.is_empty()) {
            lines.pop();
        }
        Self { lines, next: 0 }
    }

    /// Returns `(line_number, text)`; on end of input the error names the
    /// last line that was present.
    fn take(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.lines.get(self.next) {
            Some(l) => {
                self.next += 1;
                Ok((self.next, l))
            }
            None => Err(Error::parse(
                self.lines.len(),
                format!("unexpected end of file, expected {what}"),
            )),
        }
    }

    fn finish(&self) -> Result<()> {
        if self.next < self.lines.len() {
            Err(Error::parse(
                self.next + 1,
                "more rows than the header declares",
            ))
        } else {
            Ok(())
        }
    }
}

fn parse_magic(lines: &mut Lines<'_>, magic: &str) -> Result<()> {
    let (no, l) = lines.take("header")?;
    if l != magic {
        return Err(Error::parse(no, format!("expected `{magic}`, found `{l}`")));
    }
    Ok(())
}

fn parse_shape(lines: &mut Lines<'_>, keys: &[&str]) -> Result<Vec<usize>> {
    let (no, l) = lines.take("shape line")?;
    let tokens: Vec<&str> = l.split_whitespace().collect();
    if tokens.len() != keys.len() {
        return Err(Error::parse(no, format!("expected `{}`", shape_hint(keys))));
    }
    keys.iter()
        .zip(tokens)
        .map(|(key, tok)| {
            tok.strip_prefix(key)
                .and_then(|t| t.strip_prefix('='))
                .and_then(|v| v.parse::<usize>().ok())
                .ok_or_else(|| Error::parse(no, format!("expected `{}`", shape_hint(keys))))
        })
        .collect()
}

fn shape_hint(keys: &[&str]) -> String {
    keys.iter()
        .map(|k| format!("{k}=<int>"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_rows(lines: &mut Lines<'_>, rows: usize, dim: usize) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(rows * dim);
    for r in 0..rows {
        let (no, l) = lines.take(&format!("row {} of {rows}", r + 1))?;
        let before = values.len();
        for tok in l.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(no, format!("`{tok}` is not a number")))?;
            if !v.is_finite() {
                return Err(Error::parse(no, format!("non-finite value `{tok}`")));
            }
            values.push(v);
        }
        let got = values.len() - before;
        if got != dim {
            return Err(Error::parse(no, format!("{got} columns, expected {dim}")));
        }
    }
    Ok(values)
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn push_rows(out: &mut String, values: &[f64], dim: usize) {
    for row in values.chunks_exact(dim) {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            out.push_str(&format_float(*v));
        }
        out.push('\n');
    }
}

pub fn parse_embeddings(text: &str) -> Result<EmbeddingSet> {
    let mut lines = Lines::new(text);
    parse_magic(&mut lines, "EMB v1")?;
    let shape = parse_shape(&mut lines, &["n", "dim"])?;
    let (n, dim) = (shape[0], shape[1]);
    if n == 0 || dim == 0 {
        return Err(Error::parse(2, "n and dim must be positive"));
    }
    let values = parse_rows(&mut lines, n, dim)?;
    lines.finish()?;
    EmbeddingSet::new(n, dim, values)
}

pub fn embeddings_to_string(e: &EmbeddingSet) -> String {
    let mut out = format!("EMB v1\nn={} dim={}\n", e.n, e.dim);
    push_rows(&mut out, &e.values, e.dim);
    out
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    parse_embeddings(&read_text(path.as_ref())?)
}

pub fn save_embeddings(path: impl AsRef<Path>, e: &EmbeddingSet) -> Result<()> {
    write_text(path.as_ref(), &embeddings_to_string(e))
}

pub fn parse_views(text: &str) -> Result<ViewSet> {
    let mut lines = Lines::new(text);
    parse_magic(&mut lines, "VIEWS v1")?;
    let shape = parse_shape(&mut lines, &["n", "c", "dim"])?;
    let (n, c, dim) = (shape[0], shape[1], shape[2]);
    if n == 0 || c == 0 || dim == 0 {
        return Err(Error::parse(2, "n, c and dim must be positive"));
    }
    let values = parse_rows(&mut lines, n * c, dim)?;
    lines.finish()?;
    ViewSet::new(n, c, dim, values)
}

pub fn views_to_string(v: &ViewSet) -> String {
    let mut out = format!("VIEWS v1\nn={} c={} dim={}\n", v.n, v.c, v.dim);
    push_rows(&mut out, &v.values, v.dim);
    out
}

pub fn load_views(path: impl AsRef<Path>) -> Result<ViewSet> {
    parse_views(&read_text(path.as_ref())?)
}

pub fn save_views(path: impl AsRef<Path>, v: &ViewSet) -> Result<()> {
    write_text(path.as_ref(), &views_to_string(v))
}

pub fn parse_labels(text: &str) -> Result<LabelSet> {
    let mut lines = Lines::new(text);
    parse_magic(&mut lines, "LAB v1")?;
    let shape = parse_shape(&mut lines, &["n", "k"])?;
    let (n, k) = (shape[0], shape[1]);
    if n == 0 || k == 0 {
        return Err(Error::parse(2, "n and k must be positive"));
    }
    let mut labels = Vec::with_capacity(n);
    for r in 0..n {
        let (no, l) = lines.take(&format!("label {} of {n}", r + 1))?;
        let y: usize = l
            .trim()
            .parse()
            .map_err(|_| Error::parse(no, format!("`{l}` is not a class index")))?;
        if y >= k {
            return Err(Error::parse(no, format!("label {y} is outside [0, {k})")));
        }
        labels.push(y);
    }
    lines.finish()?;
    LabelSet::new(labels, k)
}

pub fn labels_to_string(l: &LabelSet) -> String {
    let mut out = format!("LAB v1\nn={} k={}\n", l.n(), l.k);
    for y in &l.labels {
        let _ = writeln!(out, "{y}");
    }
    out
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelSet> {
    parse_labels(&read_text(path.as_ref())?)
}

pub fn save_labels(path: impl AsRef<Path>, l: &LabelSet) -> Result<()> {
    write_text(path.as_ref(), &labels_to_string(l))
}

/// A PAIRS input is two EMB files of identical shape.
pub fn load_pairs(left: impl AsRef<Path>, right: impl AsRef<Path>) -> Result<PositivePairs> {
    PositivePairs::new(load_embeddings(left)?, load_embeddings(right)?)
}

/// Labels are attached when both LAB paths are given.
pub fn load_labeled_pairs(
    left: impl AsRef<Path>,
    right: impl AsRef<Path>,
    left_labels: impl AsRef<Path>,
    right_labels: impl AsRef<Path>,
) -> Result<PositivePairs> {
    load_pairs(left, right)?.with_labels(load_labels(left_labels)?, load_labels(right_labels)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_small_embedding_file() {
        let e = parse_embeddings("EMB v1\nn=2 dim=3\n1 0 0\n0 1 0\n").unwrap();
        assert_eq!((e.n(), e.dim()), (2, 3));
        assert_eq!(e.row(1), &[0.0, 1.0, 0.0]);
        assert!(!e.is_normalized());
    }

    #[test]
    fn short_file_reports_last_line() {
        let err = parse_embeddings("EMB v1\nn=3 dim=3\n1 0 0\n0 1 0\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nan_is_rejected() {
        let err = parse_embeddings("EMB v1\nn=1 dim=2\n0.5 nan\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(err.to_string().contains("non-finite"));
    }

    #[test]
    fn extra_rows_and_bad_columns() {
        let err = parse_embeddings("EMB v1\nn=1 dim=2\n1 2\n3 4\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }));
        let err = parse_embeddings("EMB v1\nn=1 dim=2\n1 2 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let err = parse_embeddings("EMB v2\nn=1 dim=2\n1 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_embeddings("EMB v1\ndim=2 n=1\n1 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn normalize_examples() {
        let e = EmbeddingSet::from_rows(&[[3.0, 4.0], [1.0, 0.0]]).unwrap();
        let n = normalize(&e).unwrap();
        assert!(n.is_normalized());
        assert!((n.row(0)[0] - 0.6).abs() < 1e-15 && (n.row(0)[1] - 0.8).abs() < 1e-15);
        assert_eq!(n.row(1), &[1.0, 0.0]);

        let z = EmbeddingSet::from_rows(&[[1.0, 1.0], [0.0, 0.0]]).unwrap();
        match normalize(&z).unwrap_err() {
            Error::Degenerate(msg) => assert!(msg.contains("row 1")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn views_and_labels() {
        let text = "VIEWS v1\nn=2 c=3 dim=2\n0 0\n0 1\n0 2\n1 0\n1 1\n1 2\n";
        let v = parse_views(text).unwrap();
        assert_eq!((v.n(), v.c(), v.dim()), (2, 3, 2));
        assert_eq!(v.view(1, 2), &[1.0, 2.0]);
        assert_eq!(v.anchor(0), &[0.0, 0.0, 0.0, 1.0, 0.0, 2.0]);

        let err = parse_labels("LAB v1\nn=2 k=2\n0\n2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }));
        let l = parse_labels("LAB v1\nn=3 k=2\n0\n1\n1\n").unwrap();
        assert_eq!(l.class_counts(), vec![1, 2]);
        assert_eq!(labels_to_string(&l), "LAB v1\nn=3 k=2\n0\n1\n1\n");
    }

    #[test]
    fn pairs_shape_mismatch() {
        let a = EmbeddingSet::from_rows(&[[1.0, 0.0]]).unwrap();
        let b = EmbeddingSet::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(PositivePairs::new(a, b), Err(Error::Shape(_))));
    }

    #[test]
    fn canonical_output_is_stable() {
        let text = "EMB v1\nn=2 dim=2\n6.00000000e-1 -8.00000000e-1\n1.23456789e3 0.00000000e0\n";
        let e = parse_embeddings(text).unwrap();
        assert_eq!(embeddings_to_string(&e), text);
    }
}
