//! GitHub-flavoured pipe tables.
//!
//! Cells are split on pipes that are neither backslash-escaped nor inside a
//! backtick code span. `\|` and ``\` `` unescape to `|` and `` ` `` in cell text;
//! every other backslash sequence is kept verbatim.

use std::sync::LazyLock;

use regex::Regex;

use super::ParsedTable;
use crate::quality::{parse_footnote_line, FootnoteGrammar};

static CAPTION_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[\s*_#>]*(Table|TABLE)\s+\d+").unwrap());

/// Byte offsets of separator pipes in `line`.
fn separator_positions(line: &str) -> Vec<usize> {
    let bytes = line.as_bytes();
    let mut seps = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' if matches!(bytes.get(i + 1), Some(b'|' | b'`')) => i += 2,
            b'`' => {
                let run = bytes[i..].iter().take_while(|&&b| b == b'`').count();
                match find_closing_run(bytes, i + run, run) {
                    Some(end) => i = end,
                    None => i += run,
                }
            }
            b'|' => {
                seps.push(i);
                i += 1;
            }
            _ => i += 1,
        }
    }
    seps
}

/// End offset of a backtick run of exactly `len` starting at or after `from`.
fn find_closing_run(bytes: &[u8], from: usize, len: usize) -> Option<usize> {
    let mut i = from;
    while i < bytes.len() {
        if bytes[i] == b'`' {
            let run = bytes[i..].iter().take_while(|&&b| b == b'`').count();
            if run == len {
                return Some(i + run);
            }
            i += run;
        } else {
            i += 1;
        }
    }
    None
}

fn unescape(cell: &str) -> String {
    let mut out = String::with_capacity(cell.len());
    let mut chars = cell.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\\' {
            if let Some(&next @ ('|' | '`')) = chars.peek() {
                out.push(next);
                chars.next();
                continue;
            }
        }
        out.push(c);
    }
    out
}

fn escape(cell: &str) -> String {
    let mut out = String::with_capacity(cell.len());
    for c in cell.chars() {
        if c == '|' || c == '`' {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

/// Splits one table line into trimmed, unescaped cells.
pub fn split_row(line: &str) -> Vec<String> {
    let line = line.trim();
    let seps = separator_positions(line);
    let mut bounds = Vec::with_capacity(seps.len() + 2);
    if seps.first() != Some(&0) {
        bounds.push(None);
    }
    bounds.extend(seps.iter().map(|&p| Some(p)));
    if seps.last().map(|&p| p + 1) != Some(line.len()) {
        bounds.push(None);
    }
    bounds
        .windows(2)
        .map(|w| {
            let start = w[0].map_or(0, |p| p + 1);
            let end = w[1].unwrap_or(line.len());
            unescape(line[start..end].trim())
        })
        .collect()
}

fn is_pipe_line(line: &str) -> bool {
    !separator_positions(line.trim()).is_empty()
}

/// A row of `---`, `:--`, `--:` or `:-:` cells.
pub fn is_delimiter_row(line: &str) -> bool {
    let cells = split_row(line);
    !cells.is_empty() && cells.iter().all(|c| is_alignment_cell(c))
}

pub(crate) fn is_alignment_cell(cell: &str) -> bool {
    let c = cell.trim();
    let c = c.strip_prefix(':').unwrap_or(c);
    let c = c.strip_suffix(':').unwrap_or(c);
    !c.is_empty() && c.bytes().all(|b| b == b'-')
}

fn is_fence(line: &str) -> Option<&'static str> {
    let t = line.trim_start();
    if t.starts_with("```") {
        Some("```")
    } else if t.starts_with("~~~") {
        Some("~~~")
    } else {
        None
    }
}

/// Line indices of `body` grouped into table candidates: maximal runs of
/// pipe-bearing lines outside fenced code blocks.
fn pipe_runs(lines: &[&str]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut fence: Option<&str> = None;
    let mut start: Option<usize> = None;
    for (i, line) in lines.iter().enumerate() {
        if let Some(f) = fence {
            if line.trim_start().starts_with(f) {
                fence = None;
            }
            continue;
        }
        let candidate = is_fence(line).is_none() && is_pipe_line(line);
        match (candidate, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i));
                start = None;
            }
            _ => {}
        }
        if let Some(f) = is_fence(line) {
            fence = Some(f);
        }
    }
    if let Some(s) = start {
        runs.push((s, lines.len()));
    }
    runs
}

/// Resolves a run of pipe lines to a table: (first line, header_row_count).
fn table_in_run(lines: &[&str]) -> Option<(usize, usize)> {
    if lines.len() >= 2 && is_delimiter_row(lines[1]) && !is_delimiter_row(lines[0]) {
        return Some((0, 1));
    }
    if lines.iter().all(|l| l.trim_start().starts_with('|')) {
        return Some((0, 0));
    }
    (0..lines.len().saturating_sub(1))
        .find(|&k| is_delimiter_row(lines[k + 1]) && !is_delimiter_row(lines[k]))
        .map(|k| (k, 1))
}

/// Every pipe table in `body`, in textual order. A run of pipe lines without a
/// delimiter row is kept with `header_row_count = 0` when all its lines start
/// with `|`.
pub fn extract_markdown_tables(body: &str) -> Vec<ParsedTable> {
    extract_with_grammar(body, &FootnoteGrammar::default())
}

pub fn extract_with_grammar(body: &str, grammar: &FootnoteGrammar) -> Vec<ParsedTable> {
    let lines: Vec<&str> = body.lines().collect();
    let mut tables = Vec::new();
    for (start, end) in pipe_runs(&lines) {
        let run = &lines[start..end];
        let Some((first, header_row_count)) = table_in_run(run) else {
            continue;
        };
        let mut cells = vec![split_row(run[first])];
        let body_from = first + 1 + header_row_count;
        cells.extend(run[body_from.min(run.len())..].iter().map(|l| split_row(l)));

        let footnotes = lines[end..]
            .iter()
            .map_while(|l| parse_footnote_line(l, grammar))
            .collect();
        let caption = lines[..start + first]
            .iter()
            .rev()
            .take(2)
            .find(|l| !l.trim().is_empty())
            .filter(|l| CAPTION_RE.is_match(l))
            .map(|l| l.trim().trim_matches(['*', '_', '#', '>', ' ']).to_string());
        tables.push(ParsedTable {
            cells,
            header_row_count,
            caption,
            footnotes,
            context: None,
        });
    }
    tables
}

/// `body` without its table lines, whitespace-collapsed. This is the README
/// context attached to Markdown tables.
pub fn markdown_prose(body: &str) -> String {
    let lines: Vec<&str> = body.lines().collect();
    let mut keep = vec![true; lines.len()];
    for (start, end) in pipe_runs(&lines) {
        if table_in_run(&lines[start..end]).is_some() {
            keep[start..end].iter_mut().for_each(|k| *k = false);
        }
    }
    lines
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .flat_map(|(l, _)| l.split_whitespace())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders a grid as a pipe table. With `header_row_count >= 1` the first row
/// becomes the header; further header rows render as body rows.
pub fn render_markdown(cells: &[Vec<String>], header_row_count: usize) -> String {
    let line = |row: &[String]| {
        let mut s = String::from("|");
        for c in row {
            s.push(' ');
            s.push_str(&escape(c));
            s.push_str(" |");
        }
        s.push('\n');
        s
    };
    let mut out = String::new();
    for (i, row) in cells.iter().enumerate() {
        out.push_str(&line(row));
        if i == 0 && header_row_count >= 1 {
            out.push('|');
            for _ in row {
                out.push_str(" --- |");
            }
            out.push('\n');
        }
    }
    out
}
