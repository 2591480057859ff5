/// Lower-cases and trims a token so that `Country` and `country` compare equal.
pub fn normalize_token(s: &str) -> String {
    s.trim().to_lowercase()
}

#[derive(Clone, Copy, PartialEq)]
enum Class {
    Upper,
    Lower,
    Digit,
    Other,
}

fn class_of(c: char) -> Class {
    if c.is_uppercase() {
        Class::Upper
    } else if c.is_lowercase() {
        Class::Lower
    } else if c.is_numeric() {
        Class::Digit
    } else if c.is_alphabetic() {
        Class::Lower
    } else {
        Class::Other
    }
}

/// Splits a compound name into normalized word tokens.
///
/// Boundaries are case transitions (`postalCode`, and acronym runs such as
/// `NHSNumber` -> `nhs`, `number`), letter/digit transitions, and any
/// non-alphanumeric separator (underscore, hyphen, dot, whitespace).
/// Connectives like `of` are kept.
pub fn tokenize(s: &str) -> Vec<String> {
    let chars: Vec<char> = s.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();

    for (i, &c) in chars.iter().enumerate() {
        let class = class_of(c);
        if class == Class::Other {
            flush(&mut current, &mut tokens);
            continue;
        }
        if let Some(&prev) = current.chars().last().as_ref() {
            let prev_class = class_of(prev);
            let next_class = chars.get(i + 1).map(|&n| class_of(n));
            let boundary = match (prev_class, class) {
                (Class::Lower, Class::Upper) => true,
                // Acronym followed by a capitalized word: "NHSNumber" splits before "N".
                (Class::Upper, Class::Upper) => next_class == Some(Class::Lower),
                (Class::Digit, Class::Upper | Class::Lower)
                | (Class::Upper | Class::Lower, Class::Digit) => true,
                _ => false,
            };
            if boundary {
                flush(&mut current, &mut tokens);
            }
        }
        current.push(c);
    }
    flush(&mut current, &mut tokens);
    tokens
}

fn flush(current: &mut String, tokens: &mut Vec<String>) {
    if !current.is_empty() {
        tokens.push(normalize_token(current));
        current.clear();
    }
}
