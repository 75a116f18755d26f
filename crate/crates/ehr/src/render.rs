//! Plain-text table rendering for observation content.

use std::fmt::Display;

/// Renders rows as a left-aligned, pipe-separated table with a header rule.
pub fn text_table<H: AsRef<str>, C: Display>(headers: &[H], rows: &[Vec<C>]) -> String {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| r.iter().map(|c| sanitize(&c.to_string())).collect())
        .collect();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.as_ref().chars().count()).collect();
    for row in &cells {
        for (i, c) in row.iter().enumerate() {
            if i < widths.len() {
                widths[i] = widths[i].max(c.chars().count());
            }
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, items: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = items
            .enumerate()
            .map(|(i, s)| {
                let pad = widths.get(i).copied().unwrap_or(0).saturating_sub(s.chars().count());
                format!("{s}{}", " ".repeat(pad))
            })
            .collect();
        out.push_str(parts.join(" | ").trim_end());
        out.push('\n');
    };
    line(&mut out, &mut headers.iter().map(|h| h.as_ref()));
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&rule.join("-+-"));
    out.push('\n');
    for row in &cells {
        line(&mut out, &mut row.iter().map(String::as_str));
    }
    out
}

// Cells must not break the row layout.
fn sanitize(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}
