/// Canonical label form used for scoring and for final answers.
///
/// Lowercases, trims, collapses internal whitespace runs to one space and
/// drops the terminal period (repeatedly, so the rule is idempotent on
/// inputs like `"a.."`). Other punctuation is kept: diagnosis titles carry
/// meaningful commas and parentheses.
pub fn normalize_answer(raw: &str) -> String {
    let collapsed = raw
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    collapsed
        .trim_end_matches(|c: char| c == '.' || c.is_whitespace())
        .to_string()
}

/// Normalizes every label and removes duplicates, keeping first occurrences.
pub fn dedup_normalized<S: AsRef<str>>(labels: &[S]) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(labels.len());
    for label in labels {
        let norm = normalize_answer(label.as_ref());
        if !out.contains(&norm) {
            out.push(norm);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn case_and_whitespace() {
        assert_eq!(normalize_answer("Piperacillin "), "piperacillin");
        assert_eq!(normalize_answer("Pleural  Effusion."), "pleural effusion");
        assert_eq!(normalize_answer("x"), "x");
        assert_eq!(normalize_answer(""), "");
    }

    #[test]
    fn keeps_inner_punctuation() {
        assert_eq!(
            normalize_answer("Sepsis, unspecified organism (A41.9)."),
            "sepsis, unspecified organism (a41.9)"
        );
    }

    #[test]
    fn trailing_period_runs_are_removed() {
        assert_eq!(normalize_answer("etc.."), "etc");
        assert_eq!(normalize_answer("a . ."), "a");
    }

    #[test]
    fn dedup_keeps_order() {
        assert_eq!(dedup_normalized(&["a", "A", "a "]), vec!["a"]);
        assert_eq!(dedup_normalized(&["B", "a", "b."]), vec!["b", "a"]);
    }

    proptest! {
        #[test]
        fn idempotent(s in "\\PC{0,40}") {
            let once = normalize_answer(&s);
            prop_assert_eq!(normalize_answer(&once), once);
        }

        #[test]
        fn idempotent_on_period_heavy_input(s in "[a. \t]{0,20}") {
            let once = normalize_answer(&s);
            prop_assert_eq!(normalize_answer(&once), once);
        }
    }
}
