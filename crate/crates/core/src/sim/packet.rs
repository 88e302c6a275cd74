use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gf::{Field, Symbol, SymbolMatrix};

/// Sparse linear map of a packet over the run's underlying unknowns:
/// (unknown id, coefficient), sorted by id, no zero coefficients.
pub type Combo = Vec<(u32, Symbol)>;

/// `sum_i coeffs[i] * combos[i]`.
pub fn combine(field: &Field, parts: impl IntoIterator<Item = (Symbol, impl AsRef<[(u32, Symbol)]>)>) -> Combo {
    let parts: Vec<(Symbol, _)> = parts
        .into_iter()
        .filter(|(c, combo)| *c != 0 && !combo.as_ref().is_empty())
        .collect();
    let (mut lo, mut hi, mut total) = (u32::MAX, 0, 0);
    for (_, combo) in &parts {
        let combo = combo.as_ref();
        lo = lo.min(combo[0].0);
        hi = hi.max(combo[combo.len() - 1].0);
        total += combo.len();
    }
    if total == 0 {
        return Combo::new();
    }
    let span = (hi - lo) as usize + 1;
    if span <= (4 * total).max(4096) {
        // ids of one chunk sit in a narrow band: accumulate densely
        let mut acc = vec![0 as Symbol; span];
        for (c, combo) in &parts {
            for &(id, a) in combo.as_ref() {
                let e = &mut acc[(id - lo) as usize];
                *e = field.add(*e, field.mul(*c, a));
            }
        }
        return acc
            .into_iter()
            .enumerate()
            .filter(|&(_, v)| v != 0)
            .map(|(i, v)| (lo + i as u32, v))
            .collect();
    }
    let mut acc: BTreeMap<u32, Symbol> = BTreeMap::new();
    for (c, combo) in &parts {
        for &(id, a) in combo.as_ref() {
            let e = acc.entry(id).or_insert(0);
            *e = field.add(*e, field.mul(*c, a));
        }
    }
    acc.into_iter().filter(|&(_, v)| v != 0).collect()
}

/// A packet of `L` field symbols, optionally with its linear map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub payload: Vec<Symbol>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combo: Option<Combo>,
}

impl Packet {
    pub fn len(&self) -> usize {
        self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payload.is_empty()
    }

    /// `self + other`, payloads and maps alike.
    pub fn plus(&self, field: &Field, other: &Packet) -> Packet {
        let mut payload = self.payload.clone();
        field.mul_add_into(&mut payload, &other.payload, 1);
        let combo = match (&self.combo, &other.combo) {
            (Some(a), Some(b)) => Some(combine(field, [(1, a), (1, b)])),
            _ => None,
        };
        Packet { payload, combo }
    }
}

/// Rows of `matrix` applied to `packets` (one output per row).
pub fn apply_matrix(field: &Field, matrix: &SymbolMatrix, packets: &[&Packet]) -> Vec<Packet> {
    debug_assert_eq!(matrix.cols(), packets.len());
    let len = packets.first().map_or(0, |p| p.len());
    let tracked = packets.iter().all(|p| p.combo.is_some());
    (0..matrix.rows())
        .map(|r| {
            let row = matrix.row(r);
            let mut payload = vec![0; len];
            for (&c, p) in row.iter().zip(packets) {
                field.mul_add_into(&mut payload, &p.payload, c);
            }
            let combo = tracked.then(|| {
                combine(
                    field,
                    row.iter().zip(packets).map(|(&c, p)| (c, p.combo.as_deref().unwrap_or(&[]))),
                )
            });
            Packet { payload, combo }
        })
        .collect()
}

/// Payloads only, for the receiver side.
pub fn apply_matrix_payloads(field: &Field, matrix: &SymbolMatrix, payloads: &[&[Symbol]]) -> Vec<Vec<Symbol>> {
    let len = payloads.first().map_or(0, |p| p.len());
    (0..matrix.rows())
        .map(|r| {
            let mut out = vec![0; len];
            for (&c, p) in matrix.row(r).iter().zip(payloads) {
                field.mul_add_into(&mut out, p, c);
            }
            out
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownKind {
    /// A random packet drawn by node `node`.
    Random { node: usize },
    /// Message number `index`.
    Message { index: usize },
}

/// Allocates the uniform unknowns of one run and draws their payloads.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unknowns {
    kinds: Vec<UnknownKind>,
}

impl Unknowns {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn kinds(&self) -> &[UnknownKind] {
        &self.kinds
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    /// Draws a fresh uniform packet; its map is recorded when `track` is set.
    pub fn fresh<R: Rng>(&mut self, field: &Field, rng: &mut R, len: usize, kind: UnknownKind, track: bool) -> Packet {
        let order = field.order() as u32;
        let payload = (0..len).map(|_| rng.gen_range(0..order) as Symbol).collect();
        let id = self.kinds.len() as u32;
        self.kinds.push(kind);
        Packet {
            payload,
            combo: track.then(|| vec![(id, 1)]),
        }
    }
}
