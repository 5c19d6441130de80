use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// arXiv id of the paper linked from the Hugging Face model-card template.
/// Cards that never removed the template link would otherwise all appear to
/// share a paper.
pub const PLACEHOLDER_ARXIV_ID: &str = "1910.09700";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    ArxivPaper,
    GithubRepo,
    HfModel,
    HfDataset,
    BibtexTitle,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkRef {
    pub raw: String,
    pub kind: LinkKind,
    pub canonical_id: Option<String>,
}

impl LinkRef {
    pub fn url(raw: impl Into<String>) -> Self {
        LinkRef {
            raw: raw.into(),
            kind: LinkKind::Other,
            canonical_id: None,
        }
    }

    pub fn bibtex_title(title: impl Into<String>) -> Self {
        LinkRef {
            raw: title.into(),
            kind: LinkKind::BibtexTitle,
            canonical_id: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtractedLinks {
    pub links: Vec<LinkRef>,
    pub malformed_bibtex: usize,
}

static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"https?://[^\s<>()\[\]{}"'`|]+"#).unwrap());
static BIBTEX_START_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"@[A-Za-z]+\s*\{").unwrap());
static TITLE_FIELD_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)[,{]\s*title\s*=\s*").unwrap());
static NEW_ARXIV_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\d{4}\.\d{4,5}$").unwrap());
static OLD_ARXIV_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[a-z\-]+(\.[A-Z]{2})?/\d{7}$").unwrap());
static VERSION_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"v\d+$").unwrap());

/// Returns every URL and BibTeX title in `body`, classified, in order of first
/// appearance with repeats collapsed.
pub fn extract_links(body: &str) -> ExtractedLinks {
    let mut found: Vec<(usize, LinkRef)> = URL_RE
        .find_iter(body)
        .map(|m| {
            let url = m.as_str().trim_end_matches(['.', ',', ';', ':', '!', '?', '*', '_']);
            (m.start(), LinkRef::url(url))
        })
        .collect();

    let mut malformed = 0;
    let mut search_from = 0;
    while let Some(m) = BIBTEX_START_RE.find_at(body, search_from) {
        let open = m.end() - 1;
        match matching_brace(body, open) {
            Some(close) => {
                match bibtex_title(&body[open..=close]) {
                    Some(title) => found.push((m.start(), LinkRef::bibtex_title(title))),
                    None => malformed += 1,
                }
                search_from = close + 1;
            }
            None => {
                malformed += 1;
                search_from = m.end();
            }
        }
    }

    found.sort_by_key(|(pos, _)| *pos);
    let mut seen = HashSet::new();
    let links = found
        .into_iter()
        .filter(|(_, l)| seen.insert((l.kind == LinkKind::BibtexTitle, l.raw.clone())))
        .map(|(_, l)| classify_link(l))
        .collect();
    ExtractedLinks {
        links,
        malformed_bibtex: malformed,
    }
}

/// Byte index of the `}` closing the `{` at `open`.
fn matching_brace(s: &str, open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, b) in s.bytes().enumerate().skip(open) {
        match b {
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn bibtex_title(entry: &str) -> Option<String> {
    let m = TITLE_FIELD_RE.find(entry)?;
    let rest = &entry[m.end()..];
    let value = match rest.as_bytes().first()? {
        b'{' => &rest[1..matching_brace(rest, 0)?],
        b'"' => {
            let end = rest[1..].find('"')?;
            &rest[1..=end]
        }
        _ => return None,
    };
    let cleaned: String = value.chars().filter(|c| *c != '{' && *c != '}').collect();
    let title = cleaned.split_whitespace().collect::<Vec<_>>().join(" ");
    (!title.is_empty()).then_some(title)
}

/// Normalized key for matching paper titles: case-folded word tokens.
pub fn title_key(title: &str) -> String {
    crate::tokenize::tokenize(title).join(" ")
}

const HF_RESERVED: &[&str] = &[
    "api", "blog", "chat", "collections", "docs", "enterprise", "join", "learn", "login",
    "models", "organizations", "posts", "pricing", "settings", "spaces", "tasks",
];
const GITHUB_RESERVED: &[&str] = &[
    "about", "features", "marketplace", "orgs", "settings", "sponsors", "topics",
];

/// Fills `kind` and `canonical_id` from the raw URL (or title).
///
/// The template placeholder paper is classified as `Other`.
pub fn classify_link(link: LinkRef) -> LinkRef {
    if link.kind == LinkKind::BibtexTitle {
        let key = title_key(&link.raw);
        return LinkRef {
            canonical_id: (!key.is_empty()).then_some(key),
            ..link
        };
    }
    let (kind, canonical_id) = classify_url(&link.raw).unwrap_or((LinkKind::Other, None));
    LinkRef {
        raw: link.raw,
        kind,
        canonical_id,
    }
}

fn classify_url(raw: &str) -> Option<(LinkKind, Option<String>)> {
    let url = url::Url::parse(raw).ok()?;
    let host = url.host_str()?.to_ascii_lowercase();
    let host = host.strip_prefix("www.").unwrap_or(&host);
    let segs: Vec<&str> = url
        .path_segments()
        .map(|s| s.filter(|p| !p.is_empty()).collect())
        .unwrap_or_default();

    match host {
        "arxiv.org" | "export.arxiv.org" => {
            if !matches!(segs.first(), Some(&("abs" | "pdf" | "html"))) {
                return None;
            }
            arxiv_paper(&segs[1..].join("/"))
        }
        "huggingface.co" | "hf.co" => match segs.as_slice() {
            ["datasets", org, name, ..] => Some((LinkKind::HfDataset, Some(format!("{org}/{name}")))),
            ["datasets", name] => Some((LinkKind::HfDataset, Some(name.to_string()))),
            ["papers", id, ..] => arxiv_paper(id),
            [first, ..] if HF_RESERVED.contains(first) => None,
            [org, repo, ..] => Some((LinkKind::HfModel, Some(format!("{org}/{repo}")))),
            [name] => Some((LinkKind::HfModel, Some(name.to_string()))),
            [] => None,
        },
        "github.com" => match segs.as_slice() {
            [owner, ..] if GITHUB_RESERVED.contains(owner) => None,
            [owner, repo, ..] => {
                let repo = repo.strip_suffix(".git").unwrap_or(repo);
                Some((LinkKind::GithubRepo, Some(format!("{owner}/{repo}"))))
            }
            _ => None,
        },
        _ => None,
    }
}

fn arxiv_paper(id: &str) -> Option<(LinkKind, Option<String>)> {
    let id = id.strip_suffix(".pdf").unwrap_or(id);
    let id = VERSION_RE.replace(id, "");
    if !(NEW_ARXIV_RE.is_match(&id) || OLD_ARXIV_RE.is_match(&id)) || id == PLACEHOLDER_ARXIV_ID {
        return None;
    }
    Some((LinkKind::ArxivPaper, Some(id.into_owned())))
}
