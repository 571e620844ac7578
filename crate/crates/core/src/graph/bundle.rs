//! Plain-text dataset bundles.
//!
//! A bundle is a directory holding:
//!
//! | file          | content                                              |
//! |---------------|------------------------------------------------------|
//! | `meta.txt`    | `n=<int>`, `m=<int>`, `classes=<int>` lines           |
//! | `edges.tsv`   | `src<TAB>dst`, 0-indexed, undirected, any orientation |
//! | `features.tsv`| n lines of m tab-separated reals                      |
//! | `labels.tsv`  | n lines, class index or `-1`                          |
//! | `train.idx`, `val.idx`, `test.idx` | one node index per line         |
//!
//! Files are UTF-8 with LF endings; blank lines and lines starting with `#`
//! are skipped.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{CsrMatrix, Graph, UNLABELED};
use crate::dense::Matrix;
use crate::error::{Error, Result};

const MASK_FILES: [&str; 3] = ["train.idx", "val.idx", "test.idx"];

struct Source {
    path: PathBuf,
    text: String,
}

impl Source {
    fn open(dir: &Path, name: &str) -> Result<Self> {
        let path = dir.join(name);
        let text = fs::read_to_string(&path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        Ok(Self { path, text })
    }

    /// Content lines with their 1-based line numbers.
    fn lines(&self) -> impl Iterator<Item = (usize, &str)> {
        self.text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
    }

    fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Bundle {
            file: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn parse<T: std::str::FromStr>(&self, line: usize, token: &str, what: &str) -> Result<T> {
        token
            .trim()
            .parse()
            .map_err(|_| self.error(line, format!("invalid {what} {token:?}")))
    }

    fn node(&self, line: usize, token: &str, n: usize) -> Result<usize> {
        let idx: usize = self.parse(line, token, "node index")?;
        if idx >= n {
            return Err(self.error(line, format!("node index out of range: {idx} >= {n}")));
        }
        Ok(idx)
    }
}

/// Reads a bundle directory into a [`Graph`].
///
/// Edges are deduplicated and symmetrized and self-loops dropped. Features
/// are returned as stored; normalization is left to the caller.
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<Graph> {
    let dir = dir.as_ref();

    let meta = Source::open(dir, "meta.txt")?;
    let (mut n, mut m, mut classes) = (None, None, None);
    for (line, text) in meta.lines() {
        let (key, value) = text
            .split_once('=')
            .ok_or_else(|| meta.error(line, "expected key=value"))?;
        let value: usize = meta.parse(line, value, "integer")?;
        match key.trim() {
            "n" => n = Some(value),
            "m" => m = Some(value),
            "classes" => classes = Some(value),
            other => return Err(meta.error(line, format!("unknown key {other:?}"))),
        }
    }
    let missing = |k: &str| meta.error(0, format!("missing key {k}"));
    let n = n.ok_or_else(|| missing("n"))?;
    let m = m.ok_or_else(|| missing("m"))?;
    let classes = classes.ok_or_else(|| missing("classes"))?;

    let edges_src = Source::open(dir, "edges.tsv")?;
    let mut edges = Vec::new();
    for (line, text) in edges_src.lines() {
        let mut tok = text.split('\t');
        let (Some(a), Some(b), None) = (tok.next(), tok.next(), tok.next()) else {
            return Err(edges_src.error(line, "expected two tab-separated node indices"));
        };
        edges.push((edges_src.node(line, a, n)?, edges_src.node(line, b, n)?));
    }
    let adjacency = CsrMatrix::from_undirected_edges(n, edges)?;

    let feat_src = Source::open(dir, "features.tsv")?;
    let mut values = Vec::with_capacity(n * m);
    let mut rows = 0;
    for (line, text) in feat_src.lines() {
        if rows == n {
            return Err(feat_src.error(line, format!("more than {n} feature rows")));
        }
        let before = values.len();
        for tok in text.split('\t') {
            let v: f64 = feat_src.parse(line, tok, "feature value")?;
            if !v.is_finite() {
                return Err(feat_src.error(line, format!("non-finite feature value {tok:?}")));
            }
            values.push(v);
        }
        if values.len() - before != m {
            return Err(feat_src.error(line, format!("expected {m} features, found {}", values.len() - before)));
        }
        rows += 1;
    }
    if rows != n {
        return Err(feat_src.error(0, format!("expected {n} feature rows, found {rows}")));
    }
    let features = Matrix::new(n, m, values)?;

    let label_src = Source::open(dir, "labels.tsv")?;
    let mut labels = Vec::with_capacity(n);
    for (line, text) in label_src.lines() {
        if labels.len() == n {
            return Err(label_src.error(line, format!("more than {n} labels")));
        }
        let y: i64 = label_src.parse(line, text, "label")?;
        if y != UNLABELED && (y < 0 || y as usize >= classes) {
            return Err(label_src.error(line, format!("label {y} outside [0, {classes}) and not -1")));
        }
        labels.push(y);
    }
    if labels.len() != n {
        return Err(label_src.error(0, format!("expected {n} labels, found {}", labels.len())));
    }

    let mut owner: Vec<Option<&str>> = vec![None; n];
    let mut masks = [vec![false; n], vec![false; n], vec![false; n]];
    for (mask, name) in masks.iter_mut().zip(MASK_FILES) {
        let src = Source::open(dir, name)?;
        for (line, text) in src.lines() {
            let idx = src.node(line, text, n)?;
            match owner[idx] {
                Some(prev) if prev != name => {
                    return Err(src.error(line, format!("node {idx} already listed in {prev}")));
                }
                _ => owner[idx] = Some(name),
            }
            mask[idx] = true;
        }
    }

    Graph::new(adjacency, features, labels, classes, masks)
}

/// Writes `graph` as a bundle directory, creating it if needed.
///
/// Features are written with shortest round-trip formatting, so loading the
/// bundle reproduces the graph exactly.
pub fn write_bundle(graph: &Graph, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let write = |name: &str, text: String| {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|source| Error::Io { path, source })
    };

    write(
        "meta.txt",
        format!(
            "n={}\nm={}\nclasses={}\n",
            graph.n(),
            graph.n_features(),
            graph.n_classes()
        ),
    )?;

    let mut edges = String::new();
    for (a, b) in graph.adjacency().upper_edges() {
        writeln!(edges, "{a}\t{b}").unwrap();
    }
    write("edges.tsv", edges)?;

    let mut feats = String::new();
    for i in 0..graph.n() {
        let row: Vec<String> = graph.features().row(i).iter().map(|v| v.to_string()).collect();
        feats.push_str(&row.join("\t"));
        feats.push('\n');
    }
    write("features.tsv", feats)?;

    let labels: String = graph.labels().iter().map(|y| format!("{y}\n")).collect();
    write("labels.tsv", labels)?;

    for (name, mask) in MASK_FILES
        .iter()
        .zip([graph.train_mask(), graph.val_mask(), graph.test_mask()])
    {
        let idx: String = mask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| format!("{i}\n"))
            .collect();
        write(name, idx)?;
    }
    Ok(())
}
