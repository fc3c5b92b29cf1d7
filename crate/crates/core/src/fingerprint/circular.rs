use std::io::Write;

use thiserror::Error;

use crate::molgraph::{atom_slots, MolecularGraph, Vocabulary};

pub const DEFAULT_NBITS: usize = 1024;
pub const DEFAULT_RADIUS: usize = 2;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FingerprintError {
    #[error("fingerprint length {0} is not a power of two >= 2")]
    Length(usize),
}

/// FNV-1a over the little-endian bytes of each word in turn.
pub fn fnv1a64(words: &[u64]) -> u64 {
    words
        .iter()
        .flat_map(|w| w.to_le_bytes())
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Folded bit vector of circular substructure identifiers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: Vec<u64>,
    nbits: usize,
    radius: usize,
}

impl Fingerprint {
    fn empty(nbits: usize, radius: usize) -> Self {
        Self {
            words: vec![0; nbits.div_ceil(64)],
            nbits,
            radius,
        }
    }

    fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        bit < self.nbits && self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn nbits(&self) -> usize {
        self.nbits
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Indices of set bits, ascending.
    pub fn ones(&self) -> Vec<usize> {
        (0..self.nbits).filter(|&b| self.get(b)).collect()
    }

    /// Dense 0/1 feature vector.
    pub fn to_dense(&self) -> Vec<f64> {
        (0..self.nbits).map(|b| if self.get(b) { 1.0 } else { 0.0 }).collect()
    }

    /// `nbits / 4` hex digits, the first digit holding the highest bit indices.
    pub fn to_hex(&self) -> String {
        let digits = self.nbits.div_ceil(4);
        (0..digits)
            .rev()
            .map(|d| {
                let nibble = (0..4).fold(0u32, |acc, k| acc | u32::from(self.get(4 * d + k)) << k);
                char::from_digit(nibble, 16).expect("nibble < 16")
            })
            .collect()
    }
}

/// Identifiers of every round, round 0 first, one per atom per round.
///
/// Round 0 hashes the atom invariant slots `(element, degree, H count)`; round
/// `r` hashes `(r, own id, neighbor count, sorted (bond type, neighbor id) pairs)`.
pub fn circular_identifiers(graph: &MolecularGraph, vocab: &Vocabulary, radius: usize) -> Vec<Vec<u64>> {
    let mut rounds = Vec::with_capacity(radius + 1);
    let mut ids: Vec<u64> = atom_slots(graph, vocab)
        .into_iter()
        .map(|(e, d, h)| fnv1a64(&[e as u64, d as u64, h as u64]))
        .collect();
    let mut words = Vec::new();
    for round in 1..=radius {
        let next = (0..graph.num_nodes())
            .map(|i| {
                let mut nbrs: Vec<(u64, u64)> = (1..=graph.num_relations())
                    .flat_map(|r| graph.neighbors_by_relation(r, i).iter().map(move |&(j, _)| (r as u64, j)))
                    .map(|(r, j)| (r, ids[j]))
                    .collect();
                nbrs.sort_unstable();
                words.clear();
                words.extend([round as u64, ids[i], nbrs.len() as u64]);
                words.extend(nbrs.iter().flat_map(|&(r, id)| [r, id]));
                fnv1a64(&words)
            })
            .collect();
        rounds.push(std::mem::replace(&mut ids, next));
    }
    rounds.push(ids);
    rounds
}

/// Folds every identifier from [`circular_identifiers`] into bit `id mod nbits`.
pub fn circular_fingerprint(
    graph: &MolecularGraph,
    vocab: &Vocabulary,
    radius: usize,
    nbits: usize,
) -> Result<Fingerprint, FingerprintError> {
    if nbits < 2 || !nbits.is_power_of_two() {
        return Err(FingerprintError::Length(nbits));
    }
    let mut fp = Fingerprint::empty(nbits, radius);
    for id in circular_identifiers(graph, vocab, radius).into_iter().flatten() {
        fp.set((id % nbits as u64) as usize);
    }
    Ok(fp)
}

/// Writes `id,hexstring` rows with a header.
pub fn write_fingerprint_csv<W: Write>(w: W, rows: &[(String, Fingerprint)]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["id", "hexstring"])?;
    for (id, fp) in rows {
        out.write_record([id.as_str(), &fp.to_hex()])?;
    }
    out.flush()?;
    Ok(())
}
