//! Columnar text dataset files.
//!
//! ```text
//! # infoshape-dataset v1
//! rows=<n>
//! cols=<d>
//! provenance=<tag>
//! label_rule=<bit-split|parity-magnitude|none>
//! generator=<free text, single line>
//! seed=<u64|none>
//! ---
//! x0,x1,...,x<d-1>,public,private
//! <d comma-separated floats>,<0|1>,<0|1>
//! ...
//! ```
//!
//! Header keys must appear in exactly this order. Floats use Rust's shortest
//! round-trip formatting, so `load(save(x)) == x` bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{DatasetMeta, LabelRule, LabeledDataset, Provenance};
use crate::error::{Error, ParseError, Result};
use crate::nn::Matrix;

pub const DATASET_HEADER: &str = "# infoshape-dataset v1";

pub fn dataset_to_string(ds: &LabeledDataset) -> String {
    let mut out = String::with_capacity(ds.len() * (ds.dim() + 2) * 20 + 256);
    let rule = ds.meta.label_rule.map_or("none", LabelRule::name);
    let seed = ds.meta.seed.map_or("none".to_owned(), |s| s.to_string());
    let generator = ds.meta.generator.replace(['\n', '\r'], " ");
    writeln!(out, "{DATASET_HEADER}").unwrap();
    writeln!(out, "rows={}", ds.len()).unwrap();
    writeln!(out, "cols={}", ds.dim()).unwrap();
    writeln!(out, "provenance={}", ds.provenance).unwrap();
    writeln!(out, "label_rule={rule}").unwrap();
    writeln!(out, "generator={generator}").unwrap();
    writeln!(out, "seed={seed}").unwrap();
    out.push_str("---\n");
    for c in 0..ds.dim() {
        write!(out, "x{c},").unwrap();
    }
    out.push_str("public,private\n");
    for r in 0..ds.len() {
        for v in ds.features().row(r) {
            write!(out, "{v:?},").unwrap();
        }
        writeln!(out, "{},{}", ds.public_labels()[r], ds.private_labels()[r]).unwrap();
    }
    out
}

fn malformed(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Malformed {
        line,
        message: message.into(),
    }
}

pub fn dataset_from_str(text: &str) -> std::result::Result<LabeledDataset, ParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| lines.next().ok_or_else(|| malformed(0, format!("missing {what}")));

    let (_, first) = next("header")?;
    if first != DATASET_HEADER {
        if let Some(v) = first.strip_prefix("# infoshape-dataset ") {
            return Err(ParseError::UnsupportedVersion(v.to_owned()));
        }
        return Err(malformed(1, "not an infoshape dataset file"));
    }
    let mut field = |key: &str| -> std::result::Result<(usize, String), ParseError> {
        let (ln, line) = next(key)?;
        let value = line
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or_else(|| malformed(ln, format!("expected `{key}=`")))?;
        Ok((ln, value.to_owned()))
    };
    let (ln, rows) = field("rows")?;
    let rows: usize = rows.parse().map_err(|_| malformed(ln, "rows is not a count"))?;
    let (ln, cols) = field("cols")?;
    let cols: usize = cols.parse().map_err(|_| malformed(ln, "cols is not a count"))?;
    let (ln, prov) = field("provenance")?;
    let provenance: Provenance = prov.parse().map_err(|_| malformed(ln, "unknown provenance"))?;
    let (ln, rule) = field("label_rule")?;
    let label_rule = match rule.as_str() {
        "none" => None,
        r => Some(r.parse::<LabelRule>().map_err(|_| malformed(ln, "unknown label rule"))?),
    };
    let (_, generator) = field("generator")?;
    let (ln, seed) = field("seed")?;
    let seed = match seed.as_str() {
        "none" => None,
        s => Some(s.parse::<u64>().map_err(|_| malformed(ln, "seed is not a u64"))?),
    };
    let (ln, sep) = next("separator")?;
    if sep != "---" {
        return Err(malformed(ln, "expected `---`"));
    }
    let (ln, names) = next("column names")?;
    if names.split(',').count() != cols + 2 {
        return Err(malformed(ln, format!("column header does not list {} columns", cols + 2)));
    }

    let mut values = Vec::with_capacity(rows * cols);
    let mut public = Vec::with_capacity(rows);
    let mut private = Vec::with_capacity(rows);
    for (ln, line) in lines {
        if public.len() == rows {
            if line.trim().is_empty() {
                continue;
            }
            return Err(malformed(ln, format!("more than the declared {rows} rows")));
        }
        let mut parts = line.split(',');
        for c in 0..cols {
            let tok = parts
                .next()
                .ok_or_else(|| malformed(ln, format!("row has fewer than {cols} features")))?;
            let v: f64 = tok
                .parse()
                .map_err(|_| malformed(ln, format!("column {c}: {tok:?} is not a number")))?;
            if !v.is_finite() {
                return Err(malformed(ln, format!("column {c} is not finite")));
            }
            values.push(v);
        }
        let mut label = |name: &str| -> std::result::Result<u8, ParseError> {
            match parts.next() {
                Some("0") => Ok(0),
                Some("1") => Ok(1),
                other => Err(malformed(ln, format!("{name} label {other:?} is not 0 or 1"))),
            }
        };
        public.push(label("public")?);
        private.push(label("private")?);
        if parts.next().is_some() {
            return Err(malformed(ln, "row has extra columns"));
        }
    }
    if public.len() != rows {
        return Err(malformed(0, format!("declared {rows} rows, found {}", public.len())));
    }
    let features = Matrix::from_vec(rows, cols, values).map_err(|e| malformed(0, e.to_string()))?;
    LabeledDataset::new(
        features,
        public,
        private,
        provenance,
        DatasetMeta {
            label_rule,
            generator,
            seed,
        },
    )
    .map_err(|e| malformed(0, e.to_string()))
}

pub fn save_dataset(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, dataset_to_string(ds)).map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    dataset_from_str(&text).map_err(|e| Error::parse(path, e))
}
