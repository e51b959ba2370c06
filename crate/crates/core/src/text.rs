//! String normalization shared by exact match, validation and agreement.

/// Punctuation characters removed before sentence comparison.
pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2010}'..='\u{2027}' | '\u{2030}'..='\u{205E}' | '\u{00A1}' | '\u{00AB}'
                | '\u{00B7}' | '\u{00BB}' | '\u{00BF}'
        )
}

/// Punctuation-stripped, whitespace-collapsed, lowercased form of a sentence.
pub fn normalize_sentence(s: &str) -> String {
    let stripped: String = s
        .chars()
        .map(|c| if is_punctuation(c) { ' ' } else { c })
        .collect();
    stripped
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lowercased maximal runs of alphanumeric characters.
///
/// `"city's 1.2%"` becomes `["city", "s", "1", "2"]`. Used where no parse is
/// available, so both sides of a comparison must go through this function.
pub fn word_runs(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Suffix-stripping stemmer covering regular English inflection
/// (`-s`, `-es`, `-ies`, `-ed`, `-d`, `-ing`).
///
/// Stems are only meaningful for comparison with other stems: `like`,
/// `likes`, `liked` and `liking` all map to `lik`.
pub fn stem(word: &str) -> String {
    let mut w = word.to_lowercase();
    let n = w.chars().count();
    if n > 4 && w.ends_with("ies") {
        w.truncate(w.len() - 3);
        w.push('y');
    } else {
        let plural_s = w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us");
        let cut = if n > 3 && (w.ends_with("es") || w.ends_with("ed") && !w.ends_with("eed")) {
            2
        } else if n > 3 && (plural_s || w.ends_with("eed")) {
            1
        } else if n > 5 && w.ends_with("ing") {
            3
        } else {
            0
        };
        w.truncate(w.len() - cut);
    }
    if w.chars().count() > 2 && w.ends_with('e') {
        w.pop();
    }
    let bytes = w.as_bytes();
    let m = bytes.len();
    if m > 3
        && bytes[m - 1] == bytes[m - 2]
        && bytes[m - 1].is_ascii_alphabetic()
        && !matches!(bytes[m - 1], b'l' | b's' | b'z')
    {
        w.pop();
    }
    w
}

/// Jaccard similarity of two sets; two empty sets are identical.
pub fn jaccard<T: Ord>(
    a: &std::collections::BTreeSet<T>,
    b: &std::collections::BTreeSet<T>,
) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}
