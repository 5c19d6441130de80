//! HTML `<table>` extraction with row/column span expansion.

use std::sync::LazyLock;

use ego_tree::NodeRef;
use regex::Regex;
use scraper::{ElementRef, Html, Node, Selector};

use super::ParsedTable;

static TABLE_SEL: LazyLock<Selector> = LazyLock::new(|| Selector::parse("table").unwrap());
static PARA_SEL: LazyLock<Selector> = LazyLock::new(|| Selector::parse("p").unwrap());
static TABLE_LABEL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*table\s+(\d+)").unwrap());

const MAX_SPAN: usize = 1000;

#[derive(Debug, Default)]
pub struct HtmlTables {
    pub tables: Vec<ParsedTable>,
    /// `<table>` elements with no rows.
    pub empty_skipped: usize,
}

/// Visible text of a node, with `<math alttext>` replaced by its TeX source
/// and whitespace collapsed.
fn node_text(node: NodeRef<'_, Node>) -> String {
    fn walk(node: NodeRef<'_, Node>, out: &mut String) {
        match node.value() {
            Node::Text(t) => out.push_str(t),
            Node::Element(e) => match e.name() {
                "script" | "style" => {}
                "br" => out.push(' '),
                "math" if e.attr("alttext").is_some() => {
                    out.push(' ');
                    out.push_str(e.attr("alttext").unwrap_or_default());
                    out.push(' ');
                }
                name => {
                    let block = matches!(name, "p" | "div" | "li" | "td" | "th" | "tr");
                    if block {
                        out.push(' ');
                    }
                    for child in node.children() {
                        walk(child, out);
                    }
                    if block {
                        out.push(' ');
                    }
                }
            },
            _ => {}
        }
    }
    let mut raw = String::new();
    for child in node.children() {
        walk(child, &mut raw);
    }
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn owning_table<'a>(el: ElementRef<'a>) -> Option<ElementRef<'a>> {
    el.ancestors()
        .filter_map(ElementRef::wrap)
        .find(|a| a.value().name() == "table")
}

fn span_attr(el: ElementRef<'_>, name: &str) -> usize {
    el.value()
        .attr(name)
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .map_or(1, |n| n.min(MAX_SPAN))
}

fn in_thead(row: ElementRef<'_>, table: ElementRef<'_>) -> bool {
    row.ancestors()
        .filter_map(ElementRef::wrap)
        .take_while(|a| a.id() != table.id())
        .any(|a| a.value().name() == "thead")
}

fn caption_of(table: ElementRef<'_>) -> Option<String> {
    let own = table
        .children()
        .filter_map(ElementRef::wrap)
        .find(|c| c.value().name() == "caption")
        .map(|c| node_text(*c));
    let figure = || {
        table
            .ancestors()
            .filter_map(ElementRef::wrap)
            .find(|a| a.value().name() == "figure")?
            .children()
            .filter_map(ElementRef::wrap)
            .find(|c| c.value().name() == "figcaption")
            .map(|c| node_text(*c))
    };
    own.or_else(figure).filter(|c| !c.is_empty())
}

fn parse_table(table: ElementRef<'_>) -> Option<ParsedTable> {
    let rows: Vec<ElementRef<'_>> = table
        .descendants()
        .filter_map(ElementRef::wrap)
        .filter(|e| e.value().name() == "tr")
        .filter(|tr| owning_table(*tr).map(|t| t.id()) == Some(table.id()))
        .collect();
    if rows.is_empty() {
        return None;
    }

    let n_rows = rows.len();
    let mut grid: Vec<Vec<Option<String>>> = vec![Vec::new(); n_rows];
    let mut header_flags = Vec::with_capacity(n_rows);
    for (r, tr) in rows.iter().enumerate() {
        let cells: Vec<ElementRef<'_>> = tr
            .children()
            .filter_map(ElementRef::wrap)
            .filter(|c| matches!(c.value().name(), "td" | "th"))
            .collect();
        header_flags.push(
            in_thead(*tr, table)
                || (!cells.is_empty() && cells.iter().all(|c| c.value().name() == "th")),
        );
        let mut col = 0;
        for cell in cells {
            while grid[r].get(col).is_some_and(Option::is_some) {
                col += 1;
            }
            let text = node_text(*cell);
            let rowspan = span_attr(cell, "rowspan");
            let colspan = span_attr(cell, "colspan");
            for row in grid.iter_mut().skip(r).take(rowspan) {
                if row.len() < col + colspan {
                    row.resize(col + colspan, None);
                }
                for slot in &mut row[col..col + colspan] {
                    *slot = Some(text.clone());
                }
            }
            col += colspan;
        }
    }

    let cells: Vec<Vec<String>> = grid
        .into_iter()
        .map(|row| row.into_iter().map(Option::unwrap_or_default).collect())
        .collect();
    if cells.iter().all(Vec::is_empty) {
        return None;
    }
    let header_row_count = header_flags.iter().take_while(|&&h| h).count();
    Some(ParsedTable {
        cells,
        header_row_count,
        caption: caption_of(table),
        footnotes: Vec::new(),
        context: None,
    })
}

/// Every `<table>` in document order. Rows of nested tables belong to the
/// innermost table only.
pub fn extract_html_tables(markup: &str) -> HtmlTables {
    let doc = Html::parse_document(markup);
    let paragraphs: Vec<String> = doc.select(&PARA_SEL).map(|p| node_text(*p)).collect();
    let mut out = HtmlTables::default();
    for table in doc.select(&TABLE_SEL) {
        match parse_table(table) {
            Some(mut t) => {
                let label = t
                    .caption
                    .as_deref()
                    .and_then(|c| TABLE_LABEL_RE.captures(c))
                    .map_or_else(|| (out.tables.len() + 1).to_string(), |c| c[1].to_string());
                t.context = Some(table_context(t.caption.as_deref(), &label, &paragraphs));
                out.tables.push(t);
            }
            None => out.empty_skipped += 1,
        }
    }
    out
}

/// Caption followed by every paragraph that mentions `Table <label>`.
fn table_context(caption: Option<&str>, label: &str, paragraphs: &[String]) -> String {
    let mention = Regex::new(&format!(r"(?i)\btable\s+{}\b", regex::escape(label))).unwrap();
    caption
        .into_iter()
        .map(str::to_string)
        .chain(paragraphs.iter().filter(|p| mention.is_match(p)).cloned())
        .collect::<Vec<_>>()
        .join(" ")
}
