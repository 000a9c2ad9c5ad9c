use super::{BehaviorRecord, CorpusError};

pub const DEFAULT_HISTORY_FRACTION: f64 = 0.8;

/// Block sizes `(history, train, test)` for `n` behaviors.
///
/// History takes `floor(fraction * n)`; the remainder is shared evenly with
/// train taking the odd record. When `n >= 3` train and test each receive at
/// least one record.
pub fn split_sizes(n: usize, history_fraction: f64) -> (usize, usize, usize) {
    let mut history = ((history_fraction * n as f64).floor() as usize).min(n);
    if n >= 3 && n - history < 2 {
        history = n - 2;
    }
    let rest = n - history;
    let train = rest.div_ceil(2);
    (history, train, rest - train)
}

/// Splits a time-ordered behavior sequence into history, train and test
/// blocks. Concatenating the three blocks gives back the input.
pub fn chronological_split(
    behaviors: &[BehaviorRecord],
    history_fraction: f64,
) -> Result<(Vec<BehaviorRecord>, Vec<BehaviorRecord>, Vec<BehaviorRecord>), CorpusError> {
    if behaviors.is_empty() {
        return Err(CorpusError::EmptyBehaviors);
    }
    if let Some(i) = behaviors.windows(2).position(|w| w[1].timestamp < w[0].timestamp) {
        return Err(CorpusError::Unsorted(i + 1));
    }
    let (h, t, _) = split_sizes(behaviors.len(), history_fraction);
    Ok((
        behaviors[..h].to_vec(),
        behaviors[h..h + t].to_vec(),
        behaviors[h + t..].to_vec(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(n: usize) -> Vec<BehaviorRecord> {
        (0..n)
            .map(|i| BehaviorRecord {
                timestamp: i as i64 * 10,
                product_id: format!("P{i}"),
                rating: 5.0,
                review_title: String::new(),
                review_text: String::new(),
            })
            .collect()
    }

    fn sizes(n: usize) -> (usize, usize, usize) {
        let (h, t, s) = chronological_split(&seq(n), DEFAULT_HISTORY_FRACTION).unwrap();
        (h.len(), t.len(), s.len())
    }

    #[test]
    fn ten_twenty_three() {
        assert_eq!(sizes(10), (8, 1, 1));
        assert_eq!(sizes(20), (16, 2, 2));
        assert_eq!(sizes(3), (1, 1, 1));
    }

    #[test]
    fn odd_remainder_goes_to_train() {
        assert_eq!(sizes(11), (8, 2, 1));
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(
            chronological_split(&[], DEFAULT_HISTORY_FRACTION),
            Err(CorpusError::EmptyBehaviors)
        ));
    }

    #[test]
    fn unsorted_is_error() {
        let mut s = seq(4);
        s.swap(1, 2);
        assert!(matches!(
            chronological_split(&s, DEFAULT_HISTORY_FRACTION),
            Err(CorpusError::Unsorted(2))
        ));
    }

    proptest! {
        #[test]
        fn split_is_a_partition(n in 1usize..200) {
            let input = seq(n);
            let (h, t, s) = chronological_split(&input, DEFAULT_HISTORY_FRACTION).unwrap();
            let joined: Vec<_> = h.iter().chain(&t).chain(&s).cloned().collect();
            prop_assert_eq!(&joined, &input);
            if n >= 3 {
                prop_assert!(!t.is_empty() && !s.is_empty());
            }
        }
    }
}
