use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const PAD: &str = "«pad»";
pub const UNK: &str = "«unk»";
pub const START: &str = "«start»";
pub const END: &str = "«end»";

pub const PAD_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;
pub const START_INDEX: usize = 2;
pub const END_INDEX: usize = 3;

pub const RESERVED: [&str; 4] = [PAD, UNK, START, END];

/// Bijection between labels and contiguous indices. The four reserved
/// labels always occupy indices 0..4; regular labels follow in order of
/// first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for Vocab {
    fn default() -> Self {
        Self::from(RESERVED.iter().map(|s| s.to_string()).collect::<Vec<_>>())
    }
}

impl From<Vec<String>> for Vocab {
    fn from(labels: Vec<String>) -> Self {
        let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        Self { labels, index }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.labels
    }
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_reserved(label: &str) -> bool {
        RESERVED.contains(&label)
    }

    /// Index of `label`, adding it if unseen.
    pub fn intern(&mut self, label: &str) -> usize {
        if let Some(&i) = self.index.get(label) {
            return i;
        }
        let i = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), i);
        i
    }

    pub fn get(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Index of `label`, or the «unk» index.
    pub fn encode(&self, label: &str) -> usize {
        self.get(label).unwrap_or(UNK_INDEX)
    }

    pub fn label(&self, index: usize) -> &str {
        self.labels.get(index).map_or(UNK, String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of non-reserved labels.
    pub fn regular_len(&self) -> usize {
        self.labels.len() - RESERVED.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// SHA-256 over the newline-joined labels, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for l in &self.labels {
            h.update(l.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_labels_come_first() {
        let mut v = Vocab::new();
        assert_eq!(v.intern("b"), 4);
        assert_eq!(v.intern("a"), 5);
        assert_eq!(v.intern("b"), 4);
        assert_eq!(v.get(PAD), Some(PAD_INDEX));
        assert_eq!(v.get(END), Some(END_INDEX));
        assert_eq!(v.encode("zzz"), UNK_INDEX);
        assert_eq!(v.regular_len(), 2);
    }

    #[test]
    fn serde_round_trip_rebuilds_index() {
        let mut v = Vocab::new();
        v.intern("x");
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocab = serde_json::from_str(&json).unwrap();
        assert_eq!(back.get("x"), Some(4));
        assert_eq!(back.fingerprint(), v.fingerprint());
    }
}
