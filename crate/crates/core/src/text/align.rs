/// One step of a minimal edit script between reference and hypothesis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum AlignStep {
    Match { r: usize, h: usize },
    Substitution { r: usize, h: usize },
    Deletion { r: usize },
    Insertion { h: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AlignmentResult {
    pub matches: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    /// Edit script in reference/hypothesis order.
    pub steps: Vec<AlignStep>,
}

impl AlignmentResult {
    pub fn distance(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

/// Unit-cost Levenshtein alignment of two word sequences.
///
/// The backtrace prefers, in order, match, substitution, deletion, insertion,
/// so equal-cost scripts are resolved deterministically.
pub fn align_words<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> AlignmentResult {
    let (n, m) = (reference.len(), hypothesis.len());
    let w = m + 1;
    let mut d = vec![0usize; (n + 1) * w];
    for i in 0..=n {
        d[i * w] = i;
    }
    for j in 0..=m {
        d[j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[(i - 1) * w + j - 1] + usize::from(reference[i - 1] != hypothesis[j - 1]);
            let del = d[(i - 1) * w + j] + 1;
            let ins = d[i * w + j - 1] + 1;
            d[i * w + j] = sub.min(del).min(ins);
        }
    }

    let mut res = AlignmentResult::default();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i * w + j];
        if i > 0 && j > 0 {
            let diag = d[(i - 1) * w + j - 1];
            if reference[i - 1] == hypothesis[j - 1] && here == diag {
                res.matches += 1;
                res.steps.push(AlignStep::Match { r: i - 1, h: j - 1 });
                i -= 1;
                j -= 1;
                continue;
            }
            if reference[i - 1] != hypothesis[j - 1] && here == diag + 1 {
                res.substitutions += 1;
                res.steps.push(AlignStep::Substitution { r: i - 1, h: j - 1 });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && here == d[(i - 1) * w + j] + 1 {
            res.deletions += 1;
            res.steps.push(AlignStep::Deletion { r: i - 1 });
            i -= 1;
        } else {
            res.insertions += 1;
            res.steps.push(AlignStep::Insertion { h: j - 1 });
            j -= 1;
        }
    }
    res.steps.reverse();
    res
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exponential-time recursive edit distance.
    fn brute(a: &[u8], b: &[u8]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ar)), Some((y, br))) => {
                let sub = brute(ar, br) + usize::from(x != y);
                sub.min(brute(ar, b) + 1).min(brute(a, br) + 1)
            }
        }
    }

    fn words(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn examples() {
        let r = align_words(&words("a b c"), &words("a b c"));
        assert_eq!((r.matches, r.distance()), (3, 0));

        let r = align_words(&words("the cat sat"), &words("the cat"));
        assert_eq!((r.deletions, r.distance()), (1, 1));

        let r = align_words(&words("a"), &words("b c"));
        assert_eq!((r.substitutions, r.insertions, r.distance()), (1, 1, 2));
    }

    #[test]
    fn exhaustive_small_pairs_match_brute_force() {
        fn all(len: usize) -> Vec<Vec<u8>> {
            let mut out = vec![vec![]];
            for _ in 0..len {
                out = out
                    .into_iter()
                    .flat_map(|v| (0..3u8).map(move |c| [v.clone(), vec![c]].concat()))
                    .collect();
            }
            out
        }
        let seqs: Vec<Vec<u8>> = (0..=4).flat_map(all).collect();
        for a in &seqs {
            for b in &seqs {
                let r = align_words(a, b);
                assert_eq!(r.distance(), brute(a, b));
                assert_eq!(r.matches + r.substitutions + r.deletions, a.len());
                assert_eq!(r.matches + r.substitutions + r.insertions, b.len());
            }
        }
    }

    #[test]
    fn steps_cover_both_sequences_in_order() {
        let a = [1, 2, 3, 4, 2];
        let b = [2, 3, 9, 4, 4, 2];
        let r = align_words(&a, &b);
        let mut ri = 0;
        let mut hi = 0;
        for s in &r.steps {
            match *s {
                AlignStep::Match { r, h } | AlignStep::Substitution { r, h } => {
                    assert_eq!((r, h), (ri, hi));
                    ri += 1;
                    hi += 1;
                }
                AlignStep::Deletion { r } => {
                    assert_eq!(r, ri);
                    ri += 1;
                }
                AlignStep::Insertion { h } => {
                    assert_eq!(h, hi);
                    hi += 1;
                }
            }
        }
        assert_eq!((ri, hi), (a.len(), b.len()));
    }

    proptest! {
        #[test]
        fn distance_is_symmetric(a in proptest::collection::vec(0u8..4, 0..12), b in proptest::collection::vec(0u8..4, 0..12)) {
            let ab = align_words(&a, &b);
            let ba = align_words(&b, &a);
            prop_assert_eq!(ab.distance(), ba.distance());
        }
    }
}
