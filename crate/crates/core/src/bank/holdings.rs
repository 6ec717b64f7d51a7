use std::collections::{HashSet, VecDeque};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{NumberClass, TrackingNumber};

/// Which held cents fund a payment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionPolicy {
    /// Uniform sample without replacement from the bank's seeded generator.
    Random,
    #[serde(rename = "fifo")]
    FirstInFirstOut,
    #[default]
    #[serde(rename = "lifo")]
    LastInFirstOut,
}

/// Cents held by an account, each tagged with the sequence number it was
/// deposited under. Banknote-linked cents are held but never picked by
/// ordinary selection; they move only as a whole note.
#[derive(Clone, Debug)]
pub struct Holdings {
    items: VecDeque<(u64, TrackingNumber)>,
    next_seq: u64,
    /// Items are in ascending sequence order. Random removal breaks this.
    sorted: bool,
    banknotes: u64,
}

impl Default for Holdings {
    fn default() -> Self {
        Self { items: VecDeque::new(), next_seq: 0, sorted: true, banknotes: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shortfall {
    pub available: u64,
}

impl Holdings {
    pub fn len(&self) -> u64 {
        self.items.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Cents available to ordinary selection.
    pub fn spendable(&self) -> u64 {
        self.len() - self.banknotes
    }

    pub fn banknote_count(&self) -> u64 {
        self.banknotes
    }

    pub fn deposit(&mut self, cents: &[TrackingNumber]) {
        self.items.reserve(cents.len());
        for &tn in cents {
            if tn.class() == NumberClass::Banknote {
                self.banknotes += 1;
            }
            self.items.push_back((self.next_seq, tn));
            self.next_seq += 1;
        }
    }

    /// `(deposit sequence, cent)` pairs in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, TrackingNumber)> + '_ {
        self.items.iter().copied()
    }

    fn ensure_sorted(&mut self) {
        if !self.sorted {
            self.items.make_contiguous().sort_unstable_by_key(|&(seq, _)| seq);
            self.sorted = true;
        }
    }

    /// Removes `n` spendable cents chosen by `policy`. FIFO output is in
    /// ascending deposit order, LIFO in descending order, Random in draw order.
    pub fn take<R: Rng>(&mut self, n: u64, policy: SelectionPolicy, rng: &mut R) -> Result<Vec<TrackingNumber>, Shortfall> {
        if n > self.spendable() {
            return Err(Shortfall { available: self.spendable() });
        }
        let n = n as usize;
        if n == 0 {
            return Ok(Vec::new());
        }
        if self.banknotes > 0 {
            return Ok(self.take_filtered(n, policy, rng));
        }
        Ok(match policy {
            SelectionPolicy::FirstInFirstOut => {
                self.ensure_sorted();
                self.items.drain(..n).map(|(_, t)| t).collect()
            }
            SelectionPolicy::LastInFirstOut => {
                self.ensure_sorted();
                let len = self.items.len();
                self.items.drain(len - n..).rev().map(|(_, t)| t).collect()
            }
            SelectionPolicy::Random => {
                let picks = index::sample(rng, self.items.len(), n).into_vec();
                let out = picks.iter().map(|&i| self.items[i].1).collect();
                self.remove_positions(picks);
                out
            }
        })
    }

    fn take_filtered<R: Rng>(&mut self, n: usize, policy: SelectionPolicy, rng: &mut R) -> Vec<TrackingNumber> {
        if policy != SelectionPolicy::Random {
            self.ensure_sorted();
        }
        let standard: Vec<usize> = (0..self.items.len())
            .filter(|&i| self.items[i].1.class() == NumberClass::Standard)
            .collect();
        let picks: Vec<usize> = match policy {
            SelectionPolicy::FirstInFirstOut => standard[..n].to_vec(),
            SelectionPolicy::LastInFirstOut => standard[standard.len() - n..].iter().rev().copied().collect(),
            SelectionPolicy::Random => index::sample(rng, standard.len(), n).into_iter().map(|k| standard[k]).collect(),
        };
        let out = picks.iter().map(|&i| self.items[i].1).collect();
        self.remove_positions(picks);
        out
    }

    fn remove_positions(&mut self, mut positions: Vec<usize>) {
        positions.sort_unstable_by(|a, b| b.cmp(a));
        let tail_run = positions.iter().enumerate().all(|(k, &p)| p == self.items.len() - 1 - k);
        if tail_run {
            self.items.truncate(self.items.len() - positions.len());
            return;
        }
        // Descending order means every element swapped in from the back is
        // one that stays.
        for p in positions {
            self.items.swap_remove_back(p);
        }
        self.sorted = false;
    }

    /// Removes exactly the given cents, or nothing if any is missing.
    pub fn take_exact(&mut self, cents: &[TrackingNumber]) -> Result<(), TrackingNumber> {
        let wanted: HashSet<TrackingNumber> = cents.iter().copied().collect();
        let present = self.items.iter().filter(|(_, t)| wanted.contains(t)).count();
        if present != wanted.len() || wanted.len() != cents.len() {
            let held: HashSet<TrackingNumber> = self.items.iter().map(|(_, t)| *t).collect();
            let missing = cents.iter().find(|t| !held.contains(t)).or(cents.first());
            return Err(*missing.expect("non-empty when short"));
        }
        self.items.retain(|(_, t)| !wanted.contains(t));
        self.banknotes -= cents.iter().filter(|t| t.class() == NumberClass::Banknote).count() as u64;
        Ok(())
    }

    pub fn contains_all(&self, cents: &[TrackingNumber]) -> bool {
        let held: HashSet<TrackingNumber> = self.items.iter().map(|(_, t)| *t).collect();
        cents.iter().all(|t| held.contains(t))
    }
}
