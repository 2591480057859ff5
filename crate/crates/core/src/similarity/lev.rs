use super::SimilarityScore;

/// Levenshtein edit distance over Unicode scalar values, single-row
/// dynamic programming after trimming the common prefix and suffix.
pub fn edit_distance(a: &str, b: &str) -> usize {
    if a.is_ascii() && b.is_ascii() {
        return distance(a.as_bytes(), b.as_bytes());
    }
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    distance(&a, &b)
}

fn distance<'a, T: PartialEq>(mut a: &'a [T], mut b: &'a [T]) -> usize {
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    a = &a[prefix..];
    b = &b[prefix..];
    let suffix = a.iter().rev().zip(b.iter().rev()).take_while(|(x, y)| x == y).count();
    a = &a[..a.len() - suffix];
    b = &b[..b.len() - suffix];
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    if b.is_empty() {
        return a.len();
    }

    let mut stack = [0usize; 64];
    let mut heap = Vec::new();
    let row: &mut [usize] = if b.len() < stack.len() {
        &mut stack[..=b.len()]
    } else {
        heap.resize(b.len() + 1, 0);
        &mut heap
    };
    for (j, cell) in row.iter_mut().enumerate() {
        *cell = j;
    }
    for (i, ca) in a.iter().enumerate() {
        let mut diagonal = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = (diagonal + usize::from(ca != cb)).min(above + 1).min(row[j] + 1);
            diagonal = above;
        }
    }
    row[b.len()]
}

/// Normalized text similarity `1 - distance / (|a| + |b|)`.
///
/// Two empty strings are identical (1.0). Inputs are expected to be
/// normalized already; the comparison itself is case-sensitive.
pub fn lev(a: &str, b: &str) -> SimilarityScore {
    let total = if a.is_ascii() && b.is_ascii() {
        a.len() + b.len()
    } else {
        a.chars().count() + b.chars().count()
    };
    if total == 0 {
        return SimilarityScore::new(1.0);
    }
    SimilarityScore::new(1.0 - edit_distance(a, b) as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folded_names_are_identical() {
        assert_eq!(lev("country", "country").value(), 1.0);
    }

    #[test]
    fn post_and_postal() {
        assert_eq!(edit_distance("post", "postal"), 2);
        assert!((lev("post", "postal").value() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn county_stays_below_strict_text_threshold() {
        assert_eq!(edit_distance("country", "county"), 1);
        let score = lev("country", "county").value();
        assert!((score - (1.0 - 1.0 / 13.0)).abs() < 1e-12);
        assert!(score < 0.95);
    }

    #[test]
    fn empty_strings() {
        assert_eq!(lev("", "").value(), 1.0);
        assert_eq!(lev("", "abc").value(), 0.0);
        assert_eq!(lev("ab", "").value(), 0.0);
    }

    #[test]
    fn counts_characters_not_bytes() {
        assert_eq!(edit_distance("café", "cafe"), 1);
        assert!((lev("café", "cafe").value() - 0.875).abs() < 1e-12);
    }
}
