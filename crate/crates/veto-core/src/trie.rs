//! Prefix tree over constraint subword sequences and the per-hypothesis
//! cursor that tracks partial matches through it.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::constraint::ConstraintSet;
use crate::vocab::SubwordId;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TrieError {
    #[error("constraint {0} has an empty subword sequence")]
    EmptyConstraint(usize),
}

#[derive(Debug, Clone, Default)]
struct Node {
    children: BTreeMap<SubwordId, usize>,
    /// Ids that, generated next, complete a constraint; values are the
    /// indices of the constraints they complete.
    completing: BTreeMap<SubwordId, Vec<usize>>,
    /// Constraints whose full sequence ends by traversing into this node.
    completed: Vec<usize>,
}

/// Shared, immutable trie over the constraint sequences of one
/// [`ConstraintSet`]. Shared prefixes share nodes.
#[derive(Debug, Clone)]
pub struct ConstraintTrie {
    nodes: Vec<Node>,
}

/// A full match of constraint `constraint`, with the summed model log
/// probability of the matched span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Completion {
    pub constraint: usize,
    pub score: f64,
}

/// Per-hypothesis match progress: all live partial matches with the sum of
/// per-step log probabilities accumulated along each path. The root is
/// implicitly active (with score 0) and never stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrieCursor {
    active: BTreeMap<usize, f64>,
}

impl TrieCursor {
    pub fn new() -> Self {
        Self::default()
    }

    /// Active non-root nodes and their accumulated scores.
    pub fn active_nodes(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.active.iter().map(|(&n, &s)| (n, s))
    }
}

pub const ROOT: usize = 0;

/// Builds the trie. Every constraint's sequence traces a root-to-node path;
/// the penultimate node of the path lists the final subword in `completing`.
pub fn build_trie(cs: &ConstraintSet) -> Result<ConstraintTrie, TrieError> {
    let mut nodes = alloc::vec![Node::default()];
    for (idx, c) in cs.iter().enumerate() {
        if c.subword_ids.is_empty() {
            return Err(TrieError::EmptyConstraint(idx));
        }
        let mut at = ROOT;
        for (pos, &id) in c.subword_ids.iter().enumerate() {
            let next = match nodes[at].children.get(&id) {
                Some(&n) => n,
                None => {
                    nodes.push(Node::default());
                    let n = nodes.len() - 1;
                    nodes[at].children.insert(id, n);
                    n
                }
            };
            if pos + 1 == c.subword_ids.len() {
                nodes[at].completing.entry(id).or_default().push(idx);
                nodes[next].completed.push(idx);
            }
            at = next;
        }
    }
    Ok(ConstraintTrie { nodes })
}

impl ConstraintTrie {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn child(&self, node: usize, token: SubwordId) -> Option<usize> {
        self.nodes.get(node)?.children.get(&token).copied()
    }

    /// Ids completing some constraint from `node`, with constraint indices.
    pub fn completing_ids(&self, node: usize) -> impl Iterator<Item = (SubwordId, &[usize])> {
        self.nodes[node]
            .completing
            .iter()
            .map(|(&id, v)| (id, v.as_slice()))
    }

    pub fn root_children(&self) -> impl Iterator<Item = SubwordId> + '_ {
        self.nodes[ROOT].children.keys().copied()
    }

    /// Advances every live match with `token` (dropping matches without that
    /// edge), always also attempting a fresh match from the root, and reports
    /// constraint completions with the summed log probability of the full
    /// matched span.
    pub fn advance_cursor(
        &self,
        cur: &TrieCursor,
        token: SubwordId,
        token_logprob: f64,
    ) -> (TrieCursor, Vec<Completion>) {
        self.advance_cursor_gated(cur, token, token_logprob, true)
    }

    /// [`Self::advance_cursor`] with the fresh root match made conditional:
    /// passing a word-initial test for `token` (for example
    /// [`crate::vocab::Vocabulary::is_word_initial`]) restricts matches to
    /// word-initial start positions. Live partial matches always continue
    /// regardless of the gate.
    pub fn advance_cursor_gated(
        &self,
        cur: &TrieCursor,
        token: SubwordId,
        token_logprob: f64,
        may_start_match: bool,
    ) -> (TrieCursor, Vec<Completion>) {
        let mut next = TrieCursor::new();
        let mut completions = Vec::new();
        let root = may_start_match.then_some((ROOT, 0.0));
        let sources = root.into_iter().chain(cur.active_nodes());
        for (node, acc) in sources {
            let Some(child) = self.child(node, token) else {
                continue;
            };
            let score = acc + token_logprob;
            for &c in &self.nodes[child].completed {
                completions.push(Completion {
                    constraint: c,
                    score,
                });
            }
            // Distinct sources have distinct root paths, so they can never
            // reach the same child; plain insert is safe.
            next.active.insert(child, score);
        }
        completions.sort_by_key(|c| c.constraint);
        (next, completions)
    }

    /// Union over the root and all active nodes of the ids that would
    /// complete a constraint in the next step, with constraint indices.
    pub fn penalized_ids(&self, cur: &TrieCursor) -> BTreeSet<(SubwordId, usize)> {
        let mut out = BTreeSet::new();
        let nodes = core::iter::once(ROOT).chain(cur.active_nodes().map(|(n, _)| n));
        for node in nodes {
            for (id, constraints) in self.completing_ids(node) {
                for &c in constraints {
                    out.insert((id, c));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::Vocabulary;
    use alloc::vec;
    use alloc::vec::Vec;

    fn setup() -> (Vocabulary, ConstraintSet, ConstraintTrie) {
        let v =
            Vocabulary::with_pieces(["\u{2581}deco", "ding", "\u{2581}be", "am", "\u{2581}search"])
                .unwrap();
        let cs = ConstraintSet::from_surfaces(["decoding", "beam search"], &v).unwrap();
        let trie = build_trie(&cs).unwrap();
        (v, cs, trie)
    }

    #[test]
    fn trie_structure_matches_the_constraint_sequences() {
        let (v, _cs, trie) = setup();
        let deco = v.id("\u{2581}deco").unwrap();
        let ding = v.id("ding").unwrap();
        let be = v.id("\u{2581}be").unwrap();
        let am = v.id("am").unwrap();
        let search = v.id("\u{2581}search").unwrap();

        let roots: Vec<SubwordId> = trie.root_children().collect();
        assert_eq!(roots, vec![deco, be]);

        let n_deco = trie.child(ROOT, deco).unwrap();
        let completing: Vec<_> = trie.completing_ids(n_deco).collect();
        assert_eq!(completing, vec![(ding, &[0usize][..])]);

        let n_be = trie.child(ROOT, be).unwrap();
        let n_beam = trie.child(n_be, am).unwrap();
        let completing: Vec<_> = trie.completing_ids(n_beam).collect();
        assert_eq!(completing, vec![(search, &[1usize][..])]);

        // No single-subword constraints, so nothing completes from the root.
        assert_eq!(trie.completing_ids(ROOT).count(), 0);
    }

    #[test]
    fn empty_set_builds_a_bare_root() {
        let trie = build_trie(&ConstraintSet::empty()).unwrap();
        assert_eq!(trie.node_count(), 1);
        assert_eq!(trie.completing_ids(ROOT).count(), 0);
    }

    #[test]
    fn shared_prefixes_share_nodes() {
        let v = Vocabulary::with_pieces(["\u{2581}a", "b", "c"]).unwrap();
        let a = v.id("\u{2581}a").unwrap();
        let b = v.id("b").unwrap();
        let c = v.id("c").unwrap();
        let cs = ConstraintSet::from_id_sequences(&[vec![a, b], vec![a, c]], &v).unwrap();
        let trie = build_trie(&cs).unwrap();
        // root, node(a), node(ab), node(ac)
        assert_eq!(trie.node_count(), 4);
        let n_a = trie.child(ROOT, a).unwrap();
        let completing: Vec<_> = trie.completing_ids(n_a).collect();
        assert_eq!(completing, vec![(b, &[0usize][..]), (c, &[1usize][..])]);
    }

    #[test]
    fn cursor_advances_and_reports_no_premature_completion() {
        let (v, _cs, trie) = setup();
        let be = v.id("\u{2581}be").unwrap();
        let cur = TrieCursor::new();
        let (cur, completions) = trie.advance_cursor(&cur, be, -0.5);
        assert!(completions.is_empty());
        let active: Vec<usize> = cur.active_nodes().map(|(n, _)| n).collect();
        assert_eq!(active, vec![trie.child(ROOT, be).unwrap()]);
    }

    #[test]
    fn full_sequence_completes_with_the_summed_score() {
        let (v, _cs, trie) = setup();
        let be = v.id("\u{2581}be").unwrap();
        let am = v.id("am").unwrap();
        let search = v.id("\u{2581}search").unwrap();
        let cur = TrieCursor::new();
        let (cur, _) = trie.advance_cursor(&cur, be, -0.5);
        let (cur, completions) = trie.advance_cursor(&cur, am, -0.25);
        assert!(completions.is_empty());
        let (_, completions) = trie.advance_cursor(&cur, search, -1.0);
        assert_eq!(completions.len(), 1);
        assert_eq!(completions[0].constraint, 1);
        assert!((completions[0].score - (-1.75)).abs() < 1e-12);
    }

    #[test]
    fn overlapping_stream_completes_exactly_once() {
        let v = Vocabulary::with_pieces(["\u{2581}a", "b"]).unwrap();
        let a = v.id("\u{2581}a").unwrap();
        let b = v.id("b").unwrap();
        let cs = ConstraintSet::from_id_sequences(&[vec![a, b]], &v).unwrap();
        let trie = build_trie(&cs).unwrap();
        let mut cur = TrieCursor::new();
        let mut all = Vec::new();
        for &t in &[a, a, b] {
            let (next, completions) = trie.advance_cursor(&cur, t, -1.0);
            all.extend(completions);
            cur = next;
        }
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].constraint, 0);
        assert!((all[0].score - (-2.0)).abs() < 1e-12);
    }

    #[test]
    fn single_subword_constraints_are_penalized_from_the_root() {
        let v = Vocabulary::with_pieces(["\u{2581}a", "ding"]).unwrap();
        let ding = v.id("ding").unwrap();
        let cs = ConstraintSet::from_id_sequences(&[vec![ding]], &v).unwrap();
        let trie = build_trie(&cs).unwrap();
        let got = trie.penalized_ids(&TrieCursor::new());
        let want: BTreeSet<(SubwordId, usize)> = [(ding, 0)].into_iter().collect();
        assert_eq!(got, want);
    }

    #[test]
    fn gated_advance_only_starts_matches_at_word_initial_tokens() {
        // Constraint "am" is a continuation piece; in gated mode a match may
        // not start on it, so the raw stream never completes it, while the
        // word-initial constraint "▁be am" still matches across the gate.
        let v = Vocabulary::with_pieces(["\u{2581}be", "am"]).unwrap();
        let be = v.id("\u{2581}be").unwrap();
        let am = v.id("am").unwrap();
        let cs = ConstraintSet::from_id_sequences(&[vec![am], vec![be, am]], &v).unwrap();
        let trie = build_trie(&cs).unwrap();

        let run = |gated: bool| -> Vec<usize> {
            let mut cur = TrieCursor::new();
            let mut seen = Vec::new();
            for &t in &[be, am] {
                let (next, completions) = if gated {
                    trie.advance_cursor_gated(&cur, t, -1.0, v.is_word_initial(t))
                } else {
                    trie.advance_cursor(&cur, t, -1.0)
                };
                seen.extend(completions.iter().map(|c| c.constraint));
                cur = next;
            }
            seen
        };
        assert_eq!(run(false), vec![0, 1]);
        assert_eq!(run(true), vec![1]);
    }

    #[test]
    fn penalized_ids_include_the_active_match_continuation() {
        let (v, _cs, trie) = setup();
        let be = v.id("\u{2581}be").unwrap();
        let am = v.id("am").unwrap();
        let search = v.id("\u{2581}search").unwrap();
        let cur = TrieCursor::new();
        let (cur, _) = trie.advance_cursor(&cur, be, -0.1);
        let (cur, _) = trie.advance_cursor(&cur, am, -0.1);
        let got = trie.penalized_ids(&cur);
        assert!(got.contains(&(search, 1)));
        // "ding" only completes from node(deco), which is not active.
        assert_eq!(got.len(), 1);
    }
}
