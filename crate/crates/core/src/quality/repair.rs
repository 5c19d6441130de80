use crate::extract::{is_alignment_cell, ExtractedTable};

/// Pads short rows with empty cells up to the widest row and clamps the
/// header count to the row count. Returns the original row widths alongside.
pub fn normalize_alignment(mut table: ExtractedTable) -> (ExtractedTable, Vec<usize>) {
    table.header_row_count = table.header_row_count.min(table.cells.len());
    let widths: Vec<usize> = table.cells.iter().map(Vec::len).collect();
    let n_cols = widths.iter().copied().max().unwrap_or(0);
    for row in &mut table.cells {
        row.resize(n_cols, String::new());
    }
    (table, widths)
}

fn blank(cell: &str) -> bool {
    cell.trim().is_empty()
}

fn same_header(a: &ExtractedTable, b: &ExtractedTable) -> bool {
    let (ha, hb) = (a.header_row_count.min(a.cells.len()), b.header_row_count.min(b.cells.len()));
    ha == hb
        && a.cells[..ha]
            .iter()
            .zip(&b.cells[..hb])
            .all(|(ra, rb)| ra.iter().map(|c| c.trim()).eq(rb.iter().map(|c| c.trim())))
}

/// Groups of indices of `tables` that stitch into one table. Consecutive
/// tables of one document join when widths match and either the headers are
/// identical or the later table has no header.
pub fn stitch_groups(tables: &[ExtractedTable]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, t) in tables.iter().enumerate() {
        let joins = groups.last().is_some_and(|g| {
            let head = &tables[g[0]];
            head.origin.doc_id == t.origin.doc_id
                && head.n_cols() == t.n_cols()
                && (t.header_row_count == 0 || (t.header_row_count > 0 && same_header(head, t)))
        });
        if joins {
            groups.last_mut().expect("checked").push(i);
        } else {
            groups.push(vec![i]);
        }
    }
    groups
}

/// Joins a group: the first table's header and caption, then every body.
pub(crate) fn stitch_group(tables: &[&ExtractedTable]) -> ExtractedTable {
    let mut merged = tables[0].clone();
    for t in &tables[1..] {
        merged
            .cells
            .extend(t.cells[t.header_row_count.min(t.cells.len())..].iter().cloned());
        merged.footnotes.extend(t.footnotes.iter().cloned());
    }
    merged
}

/// Merges fragments of multi-page tables. Input is one document's tables in
/// position order.
pub fn stitch_multipage(tables: Vec<ExtractedTable>) -> Vec<ExtractedTable> {
    stitch_groups(&tables)
        .into_iter()
        .map(|g| stitch_group(&g.iter().map(|&i| &tables[i]).collect::<Vec<_>>()))
        .collect()
}

/// Drops blank rows, Markdown alignment remnant rows and blank columns.
/// Returns `None` when no body row or no column survives. Cell text is never
/// altered.
pub fn prune_artifacts(mut table: ExtractedTable) -> Option<ExtractedTable> {
    let artifact = |row: &Vec<String>| {
        row.iter().all(|c| blank(c))
            || (row.iter().all(|c| blank(c) || is_alignment_cell(c))
                && row.iter().any(|c| is_alignment_cell(c)))
    };
    let header_rows = table.header_row_count.min(table.cells.len());
    let removed_headers = table.cells[..header_rows].iter().filter(|r| artifact(r)).count();
    table.header_row_count = header_rows - removed_headers;
    table.cells.retain(|r| !artifact(r));

    let n_cols = table.cells.iter().map(Vec::len).max().unwrap_or(0);
    let keep: Vec<bool> = (0..n_cols)
        .map(|c| table.cells.iter().any(|r| r.get(c).is_some_and(|v| !blank(v))))
        .collect();
    for row in &mut table.cells {
        let mut col = 0;
        row.retain(|_| {
            let k = keep.get(col).copied().unwrap_or(false);
            col += 1;
            k
        });
    }
    let has_body = table.cells.len() > table.header_row_count;
    let has_cols = keep.iter().any(|&k| k);
    (has_body && has_cols).then_some(table)
}
