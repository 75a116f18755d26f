/// Single-char lowercase fold, so folded text keeps its char offsets.
pub(crate) fn fold(c: char) -> char {
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

pub(crate) fn folded(s: &str) -> Vec<char> {
    s.chars().map(fold).collect()
}

/// Char offsets of every (possibly overlapping) occurrence of `needle`.
pub(crate) fn match_offsets<'a>(
    haystack: &'a [char],
    needle: &'a [char],
) -> impl Iterator<Item = usize> + 'a {
    let n = needle.len();
    let starts = if n == 0 || n > haystack.len() {
        0
    } else {
        haystack.len() - n + 1
    };
    (0..starts).filter(move |&i| haystack[i..i + n] == *needle)
}
