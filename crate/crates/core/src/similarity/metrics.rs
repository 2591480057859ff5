use super::{lev, tokenize, Combination, LexicalResource, MatchParameters, SimilarityScore};

/// The three base metrics, each comparing two single normalized words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Text,
    Morphological,
    Semantic,
}

impl Metric {
    pub fn score<L: LexicalResource + ?Sized>(
        self,
        a: &str,
        b: &str,
        lexicon: &L,
        tau_t: f64,
    ) -> f64 {
        match self {
            Metric::Text => lev(a, b).value(),
            Metric::Morphological => morphological_similarity(a, b, lexicon, tau_t).value(),
            Metric::Semantic => semantic_similarity(a, b, lexicon, tau_t).value(),
        }
    }
}

/// Best text similarity between a morphological variant of `a` and `b`.
///
/// Returns 0 when `a` and `b` already text-match (`lev >= tau_t`): that case
/// belongs to the text metric. Variants are every lexeme of every lemma of
/// `a`; only variants with `lev >= tau_t` count.
pub fn morphological_similarity<L: LexicalResource + ?Sized>(
    a: &str,
    b: &str,
    lexicon: &L,
    tau_t: f64,
) -> SimilarityScore {
    if lev(a, b).value() >= tau_t {
        return SimilarityScore::ZERO;
    }
    let variants = lexicon
        .lemmas(a)
        .iter()
        .flat_map(|lemma| lexicon.lexemes(lemma).iter());
    best_variant(variants, b, tau_t)
}

/// Best text similarity between a synonym of `a` and `b`, with the same
/// text-match short-circuit as [`morphological_similarity`].
pub fn semantic_similarity<L: LexicalResource + ?Sized>(
    a: &str,
    b: &str,
    lexicon: &L,
    tau_t: f64,
) -> SimilarityScore {
    if lev(a, b).value() >= tau_t {
        return SimilarityScore::ZERO;
    }
    best_variant(lexicon.synonyms(a).iter(), b, tau_t)
}

fn best_variant<'a>(
    variants: impl Iterator<Item = &'a String>,
    b: &str,
    tau_t: f64,
) -> SimilarityScore {
    let mut highest = 0.0;
    for variant in variants {
        let s = lev(variant, b).value();
        if s >= tau_t && s > highest {
            highest = s;
        }
    }
    SimilarityScore::new(highest)
}

/// Applies a word metric to compound names.
///
/// Each token of `a` is scored against every token of `b`. With `alpha` the
/// result is the mean over `a`'s tokens of each token's best score; without
/// it, the single highest pairwise score. Empty token lists score 0.
pub fn composite_string_similarity<F>(a: &str, b: &str, metric: F, alpha: bool) -> SimilarityScore
where
    F: Fn(&str, &str) -> f64,
{
    let tokens_a = tokenize(a);
    let tokens_b = tokenize(b);
    composite_tokens(&tokens_a, &tokens_b, metric, alpha)
}

fn composite_tokens<F>(tokens_a: &[String], tokens_b: &[String], metric: F, alpha: bool) -> SimilarityScore
where
    F: Fn(&str, &str) -> f64,
{
    if tokens_a.is_empty() || tokens_b.is_empty() {
        return SimilarityScore::ZERO;
    }
    let mut highest: f64 = 0.0;
    let mut total = 0.0;
    for word_a in tokens_a {
        let mut best_for_word: f64 = 0.0;
        for word_b in tokens_b {
            let s = metric(word_a, word_b);
            highest = highest.max(s);
            best_for_word = best_for_word.max(s);
        }
        total += best_for_word;
    }
    if alpha {
        SimilarityScore::new(total / tokens_a.len() as f64)
    } else {
        SimilarityScore::new(highest)
    }
}

/// Weighted composite scores for one name pair plus the combined decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchBreakdown {
    pub text: f64,
    pub morphological: f64,
    pub semantic: f64,
    pub score: SimilarityScore,
}

/// Computes all three weighted composite scores and the combined score.
///
/// Unlike [`match_score`], this never stops early in the `beta` strategy, so
/// the breakdown is complete; the `score` field is identical.
pub fn match_breakdown<L: LexicalResource + ?Sized>(
    a: &str,
    b: &str,
    p: &MatchParameters,
    lexicon: &L,
) -> MatchBreakdown {
    let tokens_a = tokenize(a);
    let tokens_b = tokenize(b);
    let weighted = |metric: Metric, weight: f64| {
        let raw = composite_tokens(
            &tokens_a,
            &tokens_b,
            |x, y| metric.score(x, y, lexicon, p.tau_t),
            p.alpha,
        );
        raw.value() * weight
    };
    let text = weighted(Metric::Text, p.omega_t);
    let morphological = weighted(Metric::Morphological, p.omega_m);
    let semantic = weighted(Metric::Semantic, p.omega_s);
    MatchBreakdown {
        text,
        morphological,
        semantic,
        score: combine(p, text, morphological, semantic),
    }
}

fn combine(p: &MatchParameters, text: f64, morphological: f64, semantic: f64) -> SimilarityScore {
    let value = match p.combination() {
        Combination::FirstPassing => {
            if text >= p.tau_t {
                text
            } else if morphological >= p.tau_m {
                morphological
            } else if semantic >= p.tau_s {
                semantic
            } else {
                0.0
            }
        }
        combining => {
            let combined = match combining {
                Combination::Max => text.max(morphological).max(semantic),
                Combination::Total => text + morphological + semantic,
                _ => (text + morphological + semantic) / 3.0,
            };
            if combined > p.tau {
                combined
            } else {
                0.0
            }
        }
    };
    SimilarityScore::new(value)
}

/// Decides whether two possibly compound names match; any positive return
/// is a match.
///
/// Computes weighted composite text, morphological and semantic scores. The
/// `beta` strategy returns the first weighted score meeting its own
/// threshold (text, then morphological, then semantic); the other strategies
/// return the max, total or mean of the three when it strictly exceeds `tau`.
pub fn match_score<L: LexicalResource + ?Sized>(
    a: &str,
    b: &str,
    p: &MatchParameters,
    lexicon: &L,
) -> SimilarityScore {
    let tokens_a = tokenize(a);
    let tokens_b = tokenize(b);
    let weighted = |metric: Metric, weight: f64| {
        composite_tokens(
            &tokens_a,
            &tokens_b,
            |x, y| metric.score(x, y, lexicon, p.tau_t),
            p.alpha,
        )
        .value()
            * weight
    };

    let text = weighted(Metric::Text, p.omega_t);
    if p.beta && text >= p.tau_t {
        return SimilarityScore::new(text);
    }
    let morphological = weighted(Metric::Morphological, p.omega_m);
    if p.beta && morphological >= p.tau_m {
        return SimilarityScore::new(morphological);
    }
    let semantic = weighted(Metric::Semantic, p.omega_s);
    combine(p, text, morphological, semantic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::Lexicon;

    const TAU_T: f64 = 0.95;

    fn row(combination: Combination) -> MatchParameters {
        MatchParameters::uniform(0.95, [1.0, 1.0, 0.95], combination)
    }

    #[test]
    fn morphological_variants() {
        let lex = Lexicon::bundled();
        assert_eq!(morphological_similarity("post", "postal", &lex, TAU_T).value(), 1.0);
        assert_eq!(morphological_similarity("postal", "post", &lex, TAU_T).value(), 1.0);
        assert_eq!(morphological_similarity("country", "country", &lex, TAU_T).value(), 0.0);
        assert_eq!(morphological_similarity("sex", "gender", &lex, TAU_T).value(), 0.0);
    }

    #[test]
    fn semantic_synonyms() {
        let lex = Lexicon::bundled();
        assert_eq!(semantic_similarity("sex", "gender", &lex, TAU_T).value(), 1.0);
        assert_eq!(semantic_similarity("gender", "gender", &lex, TAU_T).value(), 0.0);
        // Neither "case" nor "instance" is close to "observation".
        assert_eq!(semantic_similarity("event", "observation", &lex, TAU_T).value(), 0.0);
    }

    #[test]
    fn composite_compound_words() {
        let lex = Lexicon::bundled();
        let morph = |a: &str, b: &str| morphological_similarity(a, b, &lex, TAU_T).value();
        // "post" reaches "postal" through its lexemes; "code" text-matches
        // "code", so the morphological metric leaves that token at 0.
        let s = composite_string_similarity("PostCode", "postalCode", morph, true);
        assert_eq!(s.value(), 0.5);
        let best = composite_string_similarity("PostCode", "postalCode", morph, false);
        assert_eq!(best.value(), 1.0);

        let text = |a: &str, b: &str| lev(a, b).value();
        let s = composite_string_similarity("DateOfBirth", "birthDate", text, false);
        assert_eq!(s.value(), 1.0);
        let s = composite_string_similarity("x", "y", text, true);
        assert_eq!(s.value(), 0.5);
        assert_eq!(composite_string_similarity("", "y", text, true).value(), 0.0);
    }

    #[test]
    fn composite_mean_is_over_first_argument_tokens() {
        let text = |a: &str, b: &str| lev(a, b).value();
        // birth -> birth and date -> date are exact.
        let s = composite_string_similarity("birthDate", "DateOfBirth", text, true);
        assert_eq!(s.value(), 1.0);
        // "of" best-matches "date" at 1 - 4/6.
        let s = composite_string_similarity("DateOfBirth", "birthDate", text, true);
        assert!((s.value() - (2.0 + 1.0 / 3.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sex_matches_gender_through_semantic_branch() {
        let lex = Lexicon::bundled();
        let s = match_score("Sex", "gender", &row(Combination::FirstPassing), &lex);
        assert!((s.value() - 0.95).abs() < 1e-12);
    }

    #[test]
    fn country_does_not_match_county() {
        let lex = Lexicon::bundled();
        for c in [Combination::FirstPassing, Combination::Max, Combination::Total] {
            assert_eq!(match_score("Country", "county", &row(c), &lex).value(), 0.0);
        }
    }

    #[test]
    fn identical_names_match_under_every_strategy() {
        let lex = Lexicon::bundled();
        for c in [Combination::FirstPassing, Combination::Max, Combination::Total] {
            assert!(match_score("birthDate", "birthDate", &row(c), &lex).is_match());
        }
        // The mean of (1, 0, 0) never clears a 0.95 threshold.
        assert!(!match_score("birthDate", "birthDate", &row(Combination::Average), &lex).is_match());
    }

    #[test]
    fn breakdown_agrees_with_match_score() {
        let lex = Lexicon::bundled();
        let pairs = [
            ("Sex", "gender"),
            ("PostCode", "postalCode"),
            ("FirstName", "givenName"),
            ("Country", "county"),
            ("Code", "coding"),
        ];
        for c in [
            Combination::FirstPassing,
            Combination::Max,
            Combination::Total,
            Combination::Average,
        ] {
            let p = row(c);
            for (a, b) in pairs {
                assert_eq!(
                    match_breakdown(a, b, &p, &lex).score,
                    match_score(a, b, &p, &lex),
                    "{a}/{b} under {c:?}"
                );
            }
        }
    }
}
