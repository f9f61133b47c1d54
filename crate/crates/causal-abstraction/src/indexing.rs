//! Mixed-radix indexing of joint outcome spaces.
//!
//! One convention is used everywhere a list of variables is flattened into a
//! single index — joint distributions, mechanism columns over parent
//! configurations, virtual-mechanism rows and columns, and outcome-map
//! domains: indices are row-major with the **first** variable in the ordered
//! list varying **slowest** (the last variable ticks fastest). This module
//! is the only place that arithmetic lives.

/// Number of joint configurations of spaces with the given cardinalities.
/// The empty list has exactly one configuration (the empty assignment).
pub fn joint_len(cards: &[usize]) -> usize {
    cards.iter().product()
}

/// Flattens per-variable outcome indices into a joint index.
///
/// `digits[i]` must be `< cards[i]`; the first digit is the most
/// significant.
pub fn encode(cards: &[usize], digits: &[usize]) -> usize {
    debug_assert_eq!(cards.len(), digits.len());
    let mut index = 0;
    for (&card, &digit) in cards.iter().zip(digits) {
        debug_assert!(digit < card);
        index = index * card + digit;
    }
    index
}

/// Splits a joint index back into per-variable outcome indices.
pub fn decode(cards: &[usize], mut index: usize) -> Vec<usize> {
    let mut digits = vec![0; cards.len()];
    for (slot, &card) in digits.iter_mut().zip(cards).rev() {
        *slot = index % card;
        index /= card;
    }
    debug_assert_eq!(index, 0, "index out of range for the given cardinalities");
    digits
}

/// Iterates all joint configurations in canonical (first-slowest) order.
pub fn assignments(cards: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    (0..joint_len(cards)).map(move |index| decode(cards, index))
}
