use std::cmp::Ordering;

use crate::corpus::Span;

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Indices of the `k` largest scores, highest first; ties to the lower index.
pub fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpanConflict {
    /// No two kept spans share a word.
    Overlap,
    /// Kept spans may nest but never partially overlap.
    Cross,
}

/// Greedy selection by descending score under a conflict rule.
///
/// Equal scores keep input order. Output is sorted by `(begin, end)`.
pub fn greedy_spans(mut candidates: Vec<(Span, f64)>, conflict: SpanConflict) -> Vec<Span> {
    candidates.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal));
    let mut kept: Vec<Span> = Vec::new();
    for (span, _) in candidates {
        let clash = kept.iter().any(|k| match conflict {
            SpanConflict::Overlap => k.overlaps(&span),
            SpanConflict::Cross => k.crosses(&span) || (k.begin == span.begin && k.end == span.end),
        });
        if !clash {
            kept.push(span);
        }
    }
    kept.sort();
    kept
}

/// Inclusive `(begin, end)` spans of width at most `max_width`, by begin then end.
pub fn span_candidates(n: usize, max_width: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for b in 0..n {
        for e in b..n.min(b + max_width) {
            out.push((b, e));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_ties_to_lowest() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
        assert_eq!(top_k(&[1.0, 5.0, 5.0, 2.0], 3), vec![1, 2, 3]);
        assert_eq!(top_k(&[1.0], 4), vec![0]);
    }

    #[test]
    fn overlapping_candidates_keep_the_higher() {
        let c = vec![(Span::new(0, 2, "A"), 3.0), (Span::new(1, 3, "B"), 5.0)];
        assert_eq!(greedy_spans(c, SpanConflict::Overlap), vec![Span::new(1, 3, "B")]);
    }

    #[test]
    fn crossing_pair_keeps_one_and_nesting_keeps_both() {
        let crossing = vec![(Span::new(0, 3, "X"), 2.0), (Span::new(2, 5, "Y"), 4.0)];
        assert_eq!(greedy_spans(crossing, SpanConflict::Cross), vec![Span::new(2, 5, "Y")]);
        let nested = vec![(Span::new(0, 3, "X"), 2.0), (Span::new(1, 2, "Y"), 4.0)];
        assert_eq!(greedy_spans(nested, SpanConflict::Cross).len(), 2);
        let same = vec![(Span::new(0, 1, "X"), 2.0), (Span::new(0, 1, "Y"), 4.0)];
        assert_eq!(greedy_spans(same, SpanConflict::Cross), vec![Span::new(0, 1, "Y")]);
    }

    #[test]
    fn candidates_respect_width() {
        assert_eq!(span_candidates(3, 2), vec![(0, 0), (0, 1), (1, 1), (1, 2), (2, 2)]);
        assert_eq!(span_candidates(3, 30).len(), 6);
        assert!(span_candidates(0, 5).is_empty());
    }
}
