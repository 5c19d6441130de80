use std::collections::BTreeMap;

use super::embedding::{dot, normalize};
use crate::error::{Error, Result};
use crate::table::TableId;

/// Unit (or zero) vectors keyed by table id, rows in id order.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dim: usize,
    rows: BTreeMap<TableId, Vec<f64>>,
}

impl VectorIndex {
    pub fn new(dim: usize, rows: impl IntoIterator<Item = (TableId, Vec<f64>)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (id, mut v) in rows {
            if v.len() != dim {
                return Err(Error::Data(format!("vector for {id} has {} values, expected {dim}", v.len())));
            }
            let norm_sq = dot(&v, &v);
            if (norm_sq - 1.0).abs() > 1e-12 {
                normalize(&mut v);
            }
            map.insert(id, v);
        }
        Ok(VectorIndex { dim, rows: map })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, id: &TableId) -> Option<&[f64]> {
        self.rows.get(id).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TableId, &[f64])> {
        self.rows.iter().map(|(id, v)| (id, v.as_slice()))
    }

    /// Cosine similarity of `query` against every row, in id order.
    pub fn cosine_all(&self, query: &[f64]) -> Vec<(TableId, f64)> {
        self.rows.iter().map(|(id, v)| (id.clone(), dot(query, v))).collect()
    }

    /// `dim <N>` then `table_id<TAB>v1,v2,...` per row.
    pub fn to_text(&self) -> String {
        let mut out = format!("dim {}\n", self.dim);
        for (id, v) in &self.rows {
            let vals: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
            out.push_str(&format!("{id}\t{}\n", vals.join(",")));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::Data("empty vector file".into()))?;
        let dim: usize = header
            .strip_prefix("dim ")
            .and_then(|d| d.trim().parse().ok())
            .filter(|&d| d > 0)
            .ok_or_else(|| Error::Data(format!("vector file header `{header}` is not `dim <N>`")))?;
        let mut rows = Vec::new();
        for (i, line) in lines {
            let bad = |m: &str| Error::Data(format!("vector file line {}: {m}", i + 1));
            let (id, vals) = line.split_once('\t').ok_or_else(|| bad("missing tab"))?;
            let v = vals
                .split(',')
                .map(|x| x.trim().parse::<f64>().ok().filter(|f| f.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| bad("invalid number"))?;
            rows.push((TableId::from(id.trim()), v));
        }
        VectorIndex::new(dim, rows)
    }
}
