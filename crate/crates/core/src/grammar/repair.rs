//! RePair over the shared symbol ids.
//!
//! Each round replaces every occurrence of the most frequent adjacent pair
//! (delimiters never pair) with a fresh nonterminal, until no pair occurs
//! twice. Ties go to the pair whose first occurrence comes earliest.
//! Occurrences are counted without overlap.

use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap};

use super::{Grammar, VsSequence, DELIMITER};

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct PairRec {
    head: u32,
    tail: u32,
    count: u32,
}

/// Occurrence lists threaded through the sequence positions, plus a
/// priority set ordered by (count desc, first occurrence asc).
///
/// Every symbol of a valid `(V, S)` sequence, and every nonterminal built
/// from it, expands to a strictly increasing run of columns inside one row,
/// so two equal symbols are never adjacent. Occurrences of a pair therefore
/// never overlap, and each list stays sorted by position because new pairs
/// always involve the nonterminal created in the current round, which is
/// written left to right.
struct Repair {
    sym: Vec<u32>,
    next: Vec<u32>,
    prev: Vec<u32>,
    occ_next: Vec<u32>,
    occ_prev: Vec<u32>,
    pairs: HashMap<(u32, u32), PairRec>,
    queue: BTreeSet<(Reverse<u32>, u32, u32, u32)>,
}

impl Repair {
    fn new(sym: Vec<u32>) -> Self {
        let n = sym.len();
        let mut st = Self {
            next: (1..=n as u32).map(|i| if i as usize == n { NONE } else { i }).collect(),
            prev: (0..n as u32).map(|i| if i == 0 { NONE } else { i - 1 }).collect(),
            occ_next: vec![NONE; n],
            occ_prev: vec![NONE; n],
            sym,
            pairs: HashMap::new(),
            queue: BTreeSet::new(),
        };
        for p in 0..n.saturating_sub(1) {
            st.add_occ(p as u32);
        }
        st
    }

    fn key_at(&self, p: u32) -> Option<(u32, u32)> {
        let q = self.next[p as usize];
        if q == NONE {
            return None;
        }
        let (a, b) = (self.sym[p as usize], self.sym[q as usize]);
        (a != DELIMITER && b != DELIMITER).then_some((a, b))
    }

    fn dequeue(&mut self, key: (u32, u32), rec: PairRec) {
        if rec.count >= 2 {
            self.queue.remove(&(Reverse(rec.count), rec.head, key.0, key.1));
        }
    }

    fn enqueue(&mut self, key: (u32, u32), rec: PairRec) {
        if rec.count >= 2 {
            self.queue.insert((Reverse(rec.count), rec.head, key.0, key.1));
        }
    }

    fn add_occ(&mut self, p: u32) {
        let Some(key) = self.key_at(p) else { return };
        debug_assert_ne!(key.0, key.1, "equal adjacent symbols in a (V,S) sequence");
        let rec = match self.pairs.get(&key) {
            Some(&rec) => {
                self.dequeue(key, rec);
                debug_assert!(rec.tail < p, "occurrence lists must stay sorted");
                self.occ_next[rec.tail as usize] = p;
                self.occ_prev[p as usize] = rec.tail;
                PairRec { tail: p, count: rec.count + 1, ..rec }
            }
            None => {
                self.occ_prev[p as usize] = NONE;
                PairRec { head: p, tail: p, count: 1 }
            }
        };
        self.occ_next[p as usize] = NONE;
        self.pairs.insert(key, rec);
        self.enqueue(key, rec);
    }

    fn remove_occ(&mut self, p: u32) {
        let Some(key) = self.key_at(p) else { return };
        let Some(&rec) = self.pairs.get(&key) else {
            // Pair currently being replaced; its list was detached.
            return;
        };
        self.dequeue(key, rec);
        let (op, on) = (self.occ_prev[p as usize], self.occ_next[p as usize]);
        if op != NONE {
            self.occ_next[op as usize] = on;
        }
        if on != NONE {
            self.occ_prev[on as usize] = op;
        }
        if rec.count == 1 {
            self.pairs.remove(&key);
            return;
        }
        let rec = PairRec {
            head: if rec.head == p { on } else { rec.head },
            tail: if rec.tail == p { op } else { rec.tail },
            count: rec.count - 1,
        };
        self.pairs.insert(key, rec);
        self.enqueue(key, rec);
    }

    fn replace_all(&mut self, key: (u32, u32), rec: PairRec, x: u32) {
        self.pairs.remove(&key);
        let mut p = rec.head;
        while p != NONE {
            let following = self.occ_next[p as usize];
            let q = self.next[p as usize];
            let l = self.prev[p as usize];
            let r = self.next[q as usize];
            if l != NONE {
                self.remove_occ(l);
            }
            if r != NONE {
                self.remove_occ(q);
            }
            self.sym[p as usize] = x;
            self.next[p as usize] = r;
            if r != NONE {
                self.prev[r as usize] = p;
            }
            self.next[q as usize] = NONE;
            self.prev[q as usize] = NONE;
            if l != NONE {
                self.add_occ(l);
            }
            if r != NONE {
                self.add_occ(p);
            }
            p = following;
        }
    }

    fn run(mut self, first_nt: u32) -> (Vec<[u32; 2]>, Vec<u32>) {
        let mut rules = Vec::new();
        while let Some(&(Reverse(count), _, a, b)) = self.queue.first() {
            debug_assert!(count >= 2);
            let key = (a, b);
            let rec = self.pairs[&key];
            self.dequeue(key, rec);
            let x = first_nt
                .checked_add(rules.len() as u32)
                .expect("nonterminal ids exhausted the 32-bit symbol space");
            rules.push([a, b]);
            self.replace_all(key, rec, x);
        }
        let mut c = Vec::new();
        let mut p = if self.sym.is_empty() { NONE } else { 0 };
        while p != NONE {
            c.push(self.sym[p as usize]);
            p = self.next[p as usize];
        }
        (rules, c)
    }
}

/// RePair with the occurrence-list / priority-set scheme:
/// `O(|S| log |S|)` overall.
pub fn repair(s: &VsSequence) -> Grammar {
    let ids = s.to_ids();
    assert!(
        (s.n_cols() as u64 + 1 + ids.len() as u64) < NONE as u64,
        "sequence too long for 32-bit symbol ids"
    );
    let first_nt = s.n_cols() as u32 + 1;
    let (rules, c) = Repair::new(ids).run(first_nt);
    Grammar {
        rules,
        c,
        n_rows: s.n_rows(),
        n_cols: s.n_cols(),
    }
}

/// Quadratic reference RePair: recounts every pair from scratch each round.
/// Kept as a test oracle for [`repair`].
pub fn repair_naive(s: &VsSequence) -> Grammar {
    let (rules, c) = naive_ids(s.to_ids(), s.n_cols() as u32 + 1);
    Grammar {
        rules,
        c,
        n_rows: s.n_rows(),
        n_cols: s.n_cols(),
    }
}

fn naive_ids(mut seq: Vec<u32>, first_nt: u32) -> (Vec<[u32; 2]>, Vec<u32>) {
    let mut rules: Vec<[u32; 2]> = Vec::new();
    loop {
        // pair -> (count, first position, end of last counted occurrence)
        let mut counts: HashMap<(u32, u32), (u32, usize, usize)> = HashMap::new();
        for i in 0..seq.len().saturating_sub(1) {
            let key = (seq[i], seq[i + 1]);
            if key.0 == DELIMITER || key.1 == DELIMITER {
                continue;
            }
            let e = counts.entry(key).or_insert((0, i, 0));
            if e.0 == 0 || e.2 <= i {
                e.0 += 1;
                e.2 = i + 2;
            }
        }
        let best = counts
            .iter()
            .max_by_key(|(_, &(count, first, _))| (count, Reverse(first)))
            .map(|(&k, &(count, _, _))| (k, count));
        let Some((key, count)) = best else { break };
        if count < 2 {
            break;
        }
        let x = first_nt + rules.len() as u32;
        rules.push([key.0, key.1]);
        let mut out = Vec::with_capacity(seq.len());
        let mut i = 0;
        while i < seq.len() {
            if i + 1 < seq.len() && (seq[i], seq[i + 1]) == key {
                out.push(x);
                i += 2;
            } else {
                out.push(seq[i]);
                i += 1;
            }
        }
        seq = out;
    }
    (rules, seq)
}
