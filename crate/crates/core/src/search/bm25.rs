use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::table::TableId;
use crate::tokenize::tokenize;

const MAGIC: &[u8; 4] = b"MTTI";
const VERSION: u8 = 1;

/// Maximum number of distinct query terms scored.
pub const MAX_QUERY_TERMS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.4 }
    }
}

/// Inverted index with BM25 scoring. Documents are kept in table id order, so
/// postings are sorted by table id.
#[derive(Debug, Clone, PartialEq)]
pub struct TermIndex {
    params: Bm25Params,
    ids: Vec<TableId>,
    doc_len: Vec<u32>,
    postings: BTreeMap<String, Vec<(u32, u32)>>,
}

impl TermIndex {
    /// Documents with no tokens are left out.
    pub fn build<'a>(docs: impl IntoIterator<Item = (&'a TableId, &'a str)>, params: Bm25Params) -> Self {
        let mut docs: Vec<(&TableId, Vec<String>)> = docs
            .into_iter()
            .map(|(id, text)| (id, tokenize(text)))
            .filter(|(_, toks)| !toks.is_empty())
            .collect();
        docs.sort_by(|a, b| a.0.cmp(b.0));
        docs.dedup_by(|a, b| a.0 == b.0);

        let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
        let mut doc_len = Vec::with_capacity(docs.len());
        for (i, (_, toks)) in docs.iter().enumerate() {
            doc_len.push(toks.len() as u32);
            let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
            for t in toks {
                *tf.entry(t).or_default() += 1;
            }
            for (t, n) in tf {
                postings.entry(t.to_string()).or_default().push((i as u32, n));
            }
        }
        TermIndex {
            params,
            ids: docs.into_iter().map(|(id, _)| id.clone()).collect(),
            doc_len,
            postings,
        }
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: &TableId) -> bool {
        self.ids.binary_search(id).is_ok()
    }

    pub fn avg_doc_len(&self) -> f64 {
        if self.doc_len.is_empty() {
            0.0
        } else {
            self.doc_len.iter().map(|&l| f64::from(l)).sum::<f64>() / self.doc_len.len() as f64
        }
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.ids.len() as f64;
        let df = self.postings.get(term).map_or(0, Vec::len) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// The distinct query terms actually scored.
    pub fn query_terms(query: &str) -> Vec<String> {
        let mut terms = crate::tokenize::distinct_tokens(query);
        terms.truncate(MAX_QUERY_TERMS);
        terms
    }

    /// BM25 score of every document sharing a term with `query`, in table id
    /// order.
    pub fn score(&self, query: &str) -> Vec<(TableId, f64)> {
        let Bm25Params { k1, b } = self.params;
        let avgdl = self.avg_doc_len();
        let mut scores: HashMap<u32, f64> = HashMap::new();
        for term in Self::query_terms(query) {
            let Some(plist) = self.postings.get(&term) else { continue };
            let idf = self.idf(&term);
            for &(doc, tf) in plist {
                let tf = f64::from(tf);
                let dl = f64::from(self.doc_len[doc as usize]);
                let s = idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
                *scores.entry(doc).or_default() += s;
            }
        }
        let mut out: Vec<(u32, f64)> = scores.into_iter().collect();
        out.sort_by_key(|&(d, _)| d);
        out.into_iter().map(|(d, s)| (self.ids[d as usize].clone(), s)).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.params.k1.to_le_bytes());
        out.extend_from_slice(&self.params.b.to_le_bytes());
        put_u32(&mut out, self.ids.len() as u32);
        for (id, len) in self.ids.iter().zip(&self.doc_len) {
            put_str(&mut out, id.as_str());
            put_u32(&mut out, *len);
        }
        put_u32(&mut out, self.postings.len() as u32);
        for (term, plist) in &self.postings {
            put_str(&mut out, term);
            put_u32(&mut out, plist.len() as u32);
            for &(d, tf) in plist {
                put_u32(&mut out, d);
                put_u32(&mut out, tf);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Data("not a term index file".into()));
        }
        let version = r.take(1)?[0];
        if version != VERSION {
            return Err(Error::Data(format!("unsupported term index version {version}")));
        }
        let k1 = r.f64()?;
        let b = r.f64()?;
        let n = r.u32()? as usize;
        let mut ids = Vec::with_capacity(n);
        let mut doc_len = Vec::with_capacity(n);
        for _ in 0..n {
            ids.push(TableId::new(r.string()?));
            doc_len.push(r.u32()?);
        }
        let n_terms = r.u32()? as usize;
        let mut postings = BTreeMap::new();
        for _ in 0..n_terms {
            let term = r.string()?;
            let len = r.u32()? as usize;
            let mut plist = Vec::with_capacity(len);
            for _ in 0..len {
                let d = r.u32()?;
                if d as usize >= n {
                    return Err(Error::Data("term index posting out of range".into()));
                }
                plist.push((d, r.u32()?));
            }
            postings.insert(term, plist);
        }
        if r.pos != bytes.len() {
            return Err(Error::Data("trailing bytes in term index".into()));
        }
        Ok(TermIndex {
            params: Bm25Params { k1, b },
            ids,
            doc_len,
            postings,
        })
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Data("truncated term index".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Data("invalid utf-8 in term index".into()))
    }
}
