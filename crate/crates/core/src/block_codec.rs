//! Encoding and decoding of one basic block.
//!
//! Cell layout of a block of length `N_0 = t + m n + 2n(t - 1)`:
//!
//! ```text
//! [ header: t | data_1: n | .. | data_m: n | side_2: 2n | .. | side_t: 2n ]
//! ```
//!
//! The header is a unary round counter. Round 1 stores a weight-`B_1`
//! subset in each data word. Round `j >= 2` picks one hash `H_j` from the
//! truncated affine family such that every data word `w_i` can be raised to
//! some `y_i >= w_i` of weight at most `B_j` with `H_j(y_i) = x_i`, and
//! stores the index `(a, b)` of `H_j` in side block `j`.

use std::sync::Arc;

use bitvec::prelude::*;

use crate::bitwords::{self, count_above, enumerate_above, subset_rank, subset_unrank, BitWord};
use crate::capacity::WomParams;
use crate::gf2n::FieldSpec;
use crate::hashfam::{apply_raw, HashIndex};
use crate::{Error, Result};

/// Payload of one round for one block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RoundPayload {
    /// Round 1: one colex rank in `[0, C(n, B_1))` per data word.
    Subsets(Vec<u64>),
    /// Round `j >= 2`: one word of `k_j - l` bits per data word.
    Words(Vec<BitWord>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundMessage {
    round: u32,
    payload: RoundPayload,
}

impl RoundMessage {
    pub fn first(ranks: Vec<u64>) -> Self {
        RoundMessage { round: 1, payload: RoundPayload::Subsets(ranks) }
    }

    pub fn later(round: u32, words: Vec<BitWord>) -> Result<Self> {
        if round < 2 {
            return Err(Error::usage("word payloads start at round 2"));
        }
        Ok(RoundMessage { round, payload: RoundPayload::Words(words) })
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn payload(&self) -> &RoundPayload {
        &self.payload
    }

    /// Checks arity and ranges against `params`.
    pub fn validate(&self, params: &WomParams) -> Result<()> {
        if self.round == 0 || self.round > params.t() {
            return Err(Error::usage(format!("round {} outside 1..={}", self.round, params.t())));
        }
        let arity = match &self.payload {
            RoundPayload::Subsets(r) => r.len(),
            RoundPayload::Words(w) => w.len(),
        };
        if arity as u64 != params.m() {
            return Err(Error::usage(format!("message has {arity} parts, expected {}", params.m())));
        }
        match &self.payload {
            RoundPayload::Subsets(ranks) => {
                let limit = bitwords::binomial(params.n(), params.budget(1));
                if let Some(r) = ranks.iter().find(|&&r| r >= limit) {
                    return Err(Error::usage(format!("rank {r} outside [0, {limit})")));
                }
            }
            RoundPayload::Words(words) => {
                let len = params.hash_output_len(self.round);
                if let Some(w) = words.iter().find(|w| w.len() != len) {
                    return Err(Error::usage(format!("word of {} bits, expected {len}", w.len())));
                }
            }
        }
        Ok(())
    }
}

/// The memory content of one basic block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockState {
    params: Arc<WomParams>,
    header: BitWord,
    data: Vec<BitWord>,
    sides: Vec<BitWord>,
}

impl BlockState {
    /// The all-zero block.
    pub fn fresh(params: Arc<WomParams>) -> Result<Self> {
        if !params.desk_executable() {
            return Err(Error::usage(format!(
                "n = {} is analysis-scale; blocks need 2 <= n <= {}",
                params.n(),
                crate::capacity::DESK_MAX_N
            )));
        }
        if params.t() > bitwords::MAX_LEN {
            return Err(Error::usage(format!("t = {} exceeds the header width", params.t())));
        }
        let n = params.n();
        Ok(BlockState {
            header: BitWord::from_raw(params.t(), 0),
            data: vec![BitWord::from_raw(n, 0); params.m() as usize],
            sides: vec![BitWord::from_raw(2 * n, 0); params.t() as usize - 1],
            params,
        })
    }

    pub fn params(&self) -> &Arc<WomParams> {
        &self.params
    }

    pub fn header(&self) -> BitWord {
        self.header
    }

    pub fn data(&self) -> &[BitWord] {
        &self.data
    }

    /// Side blocks for rounds 2..=t.
    pub fn sides(&self) -> &[BitWord] {
        &self.sides
    }

    /// Number of rounds written so far.
    pub fn round(&self) -> u32 {
        64 - self.header.bits().leading_zeros()
    }

    fn field(&self) -> FieldSpec {
        FieldSpec::canonical(self.params.n()).expect("checked in fresh")
    }

    /// True iff every region of `self` is coordinatewise above `earlier`.
    pub fn dominates(&self, earlier: &BlockState) -> bool {
        let pairs = std::iter::once((&self.header, &earlier.header))
            .chain(self.data.iter().zip(&earlier.data))
            .chain(self.sides.iter().zip(&earlier.sides));
        self.params == earlier.params && pairs.into_iter().all(|(y, w)| y.dominates(w).unwrap_or(false))
    }

    fn with_round_marked(mut self, round: u32) -> Self {
        self.header = BitWord::from_raw(self.header.len(), self.header.bits() | 1 << (round - 1));
        self
    }

    /// Writes the block into `cells`, which must be exactly `N_0` long.
    pub fn store(&self, cells: &mut BitSlice<u8, Lsb0>) -> Result<()> {
        let p = &self.params;
        if cells.len() as u64 != p.n0() {
            return Err(Error::usage(format!("{} cells for a block of {}", cells.len(), p.n0())));
        }
        store_word(cells, 0, &self.header);
        for (i, w) in self.data.iter().enumerate() {
            store_word(cells, p.data_offset(i as u64) as usize, w);
        }
        for (j, s) in self.sides.iter().enumerate() {
            store_word(cells, p.side_offset(j as u32 + 2) as usize, s);
        }
        Ok(())
    }

    pub fn to_cells(&self) -> BitVec<u8, Lsb0> {
        let mut cells = bitvec![u8, Lsb0; 0; self.params.n0() as usize];
        self.store(&mut cells).expect("sized to n0");
        cells
    }

    /// Reads a block back; rejects headers that are not a unary counter.
    pub fn load(params: Arc<WomParams>, cells: &BitSlice<u8, Lsb0>) -> Result<Self> {
        let mut state = BlockState::fresh(params)?;
        let p = state.params.clone();
        if cells.len() as u64 != p.n0() {
            return Err(Error::usage(format!("{} cells for a block of {}", cells.len(), p.n0())));
        }
        state.header = load_word(cells, 0, p.t());
        let h = state.header.bits();
        if h & h.wrapping_add(1) != 0 {
            return Err(Error::usage(format!("round header {:?} is not unary", state.header)));
        }
        for i in 0..p.m() {
            state.data[i as usize] = load_word(cells, p.data_offset(i) as usize, p.n());
        }
        for j in 2..=p.t() {
            state.sides[j as usize - 2] = load_word(cells, p.side_offset(j) as usize, 2 * p.n());
        }
        Ok(state)
    }
}

fn store_word(cells: &mut BitSlice<u8, Lsb0>, offset: usize, word: &BitWord) {
    if !word.is_empty() {
        cells[offset..offset + word.len() as usize].store_le(word.bits());
    }
}

fn load_word(cells: &BitSlice<u8, Lsb0>, offset: usize, len: u32) -> BitWord {
    if len == 0 {
        return BitWord::from_raw(0, 0);
    }
    BitWord::from_raw(len, cells[offset..offset + len as usize].load_le::<u64>())
}

/// Round 1: each data word becomes the weight-`B_1` word with the given rank.
pub fn encode_round1(state: &BlockState, msg: &RoundMessage) -> Result<BlockState> {
    if msg.round != 1 || state.round() != 0 {
        return Err(Error::Sequencing { current: state.round(), requested: msg.round });
    }
    msg.validate(&state.params)?;
    let RoundPayload::Subsets(ranks) = &msg.payload else {
        return Err(Error::usage("round 1 takes subset ranks"));
    };
    let (n, b1) = (state.params.n(), state.params.budget(1));
    let mut next = state.clone();
    for (slot, &rank) in next.data.iter_mut().zip(ranks) {
        *slot = subset_unrank(rank, n, b1)?;
    }
    Ok(next.with_round_marked(1))
}

/// Encodes the next round; dispatches to [`encode_round1`] for round 1.
pub fn encode_round(state: &BlockState, msg: &RoundMessage) -> Result<BlockState> {
    if msg.round == 1 {
        return encode_round1(state, msg);
    }
    if msg.round != state.round() + 1 {
        return Err(Error::Sequencing { current: state.round(), requested: msg.round });
    }
    msg.validate(&state.params)?;
    let RoundPayload::Words(words) = &msg.payload else {
        return Err(Error::usage("rounds after the first take word payloads"));
    };
    let (hash, ys) = search_block_encoding(&state.params, msg.round, &state.data, words)?;
    let mut next = state.clone();
    next.data = ys;
    next.sides[msg.round as usize - 2] = hash.to_side_word();
    Ok(next.with_round_marked(msg.round))
}

/// Decodes the most recent round.
pub fn decode_round(state: &BlockState, round: u32) -> Result<RoundMessage> {
    if round == 0 || round != state.round() {
        return Err(Error::DecodeRound { current: state.round(), requested: round });
    }
    let p = &state.params;
    if round == 1 {
        let ranks = state.data.iter().map(|w| subset_rank(w, p.budget(1))).collect::<Result<_>>()?;
        return Ok(RoundMessage::first(ranks));
    }
    let hash =
        HashIndex::from_side_word(state.field(), &state.sides[round as usize - 2], p.k_for(round), p.l())?;
    let words = state.data.iter().map(|y| hash.apply(y)).collect::<Result<_>>()?;
    RoundMessage::later(round, words)
}

/// True when the existence guarantee covers this round: every candidate
/// set has at least `2^{k_j}` words and `m < 2^{l/4}`.
pub fn in_guaranteed_regime(params: &WomParams, round: u32, w: &[BitWord]) -> bool {
    let target = SearchTarget {
        round,
        n: params.n(),
        k: params.k_for(round),
        l: params.l(),
        budget: params.budget(round),
    };
    in_guaranteed_regime_with(&target, params.m(), w)
}

/// [`in_guaranteed_regime`] for an explicit search shape.
pub fn in_guaranteed_regime_with(target: &SearchTarget, m: u64, w: &[BitWord]) -> bool {
    let k = target.k;
    let enough = w.iter().all(|wi| k < 64 && count_above(wi, target.budget) >= 1 << k);
    enough && (m as f64) < 2f64.powf(target.l as f64 / 4.0)
}

/// Outcome of trying one multiplier `a`.
enum Attempt {
    /// Smallest common shift `v`.
    Found(u32),
    /// The running intersection emptied at this block.
    Empty(usize),
}

struct Search<'a> {
    spec: FieldSpec,
    out_len: u32,
    candidates: &'a [Vec<u32>],
    targets: &'a [u32],
}

impl Search<'_> {
    /// T_i = { H_{a,0}(y) XOR x_i : y in Y_i }; intersects all T_i.
    fn attempt(&self, a: u32) -> Attempt {
        let shifts = |i: usize| -> Vec<u32> {
            let mut t: Vec<u32> = self.candidates[i]
                .iter()
                .map(|&y| apply_raw(self.spec, a, 0, y, self.out_len) as u32 ^ self.targets[i])
                .collect();
            t.sort_unstable();
            t.dedup();
            t
        };
        let mut common = shifts(0);
        for i in 1..self.candidates.len() {
            if common.is_empty() {
                return Attempt::Empty(i - 1);
            }
            let next = shifts(i);
            common.retain(|v| next.binary_search(v).is_ok());
            if common.is_empty() {
                return Attempt::Empty(i);
            }
        }
        match common.first() {
            Some(&v) => Attempt::Found(v),
            None => Attempt::Empty(self.candidates.len() - 1),
        }
    }

    #[cfg(feature = "parallel")]
    fn first_solution(&self) -> Option<(u32, u32)> {
        use rayon::prelude::*;
        (0..self.spec.order() as u32).into_par_iter().find_map_first(|a| match self.attempt(a) {
            Attempt::Found(v) => Some((a, v)),
            Attempt::Empty(_) => None,
        })
    }

    #[cfg(not(feature = "parallel"))]
    fn first_solution(&self) -> Option<(u32, u32)> {
        (0..self.spec.order() as u32).find_map(|a| match self.attempt(a) {
            Attempt::Found(v) => Some((a, v)),
            Attempt::Empty(_) => None,
        })
    }

    /// Block at which intersections most often emptied (first on ties).
    fn bottleneck(&self) -> usize {
        let mut hits = vec![0u64; self.candidates.len()];
        for a in 0..self.spec.order() as u32 {
            if let Attempt::Empty(i) = self.attempt(a) {
                hits[i] += 1;
            }
        }
        let best = hits.iter().copied().max().unwrap_or(0);
        hits.iter().position(|&h| h == best).unwrap_or(0)
    }
}

/// Finds `H` and `y_1..y_m` with `y_i >= w_i`, `weight(y_i) <= B_round` and
/// `H(y_i) = x_i`.
///
/// Multipliers `a` are tried in ascending order. For the first `a` whose
/// shift sets intersect, `b` is the smallest common shift (zero above bit
/// `k - l`) and each `y_i` is the smallest candidate hitting `x_i`. The
/// result is therefore a pure function of the inputs.
pub fn search_block_encoding(
    params: &WomParams,
    round: u32,
    w: &[BitWord],
    x: &[BitWord],
) -> Result<(HashIndex, Vec<BitWord>)> {
    if round < 2 || round > params.t() {
        return Err(Error::usage(format!("search runs for rounds 2..={}, got {round}", params.t())));
    }
    if w.len() as u64 != params.m() {
        return Err(Error::usage(format!("expected {} current words, got {}", params.m(), w.len())));
    }
    let prior = params.budget(round - 1);
    if let Some(wi) = w.iter().find(|wi| wi.weight() > prior) {
        return Err(Error::usage(format!(
            "current word {wi:?} violates the round-{} budget {prior}",
            round - 1
        )));
    }
    let target = SearchTarget {
        round,
        n: params.n(),
        k: params.k_for(round),
        l: params.l(),
        budget: params.budget(round),
    };
    search_with_budget(&target, w, x)
}

/// Shape of one search instance, independent of any [`WomParams`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchTarget {
    /// Reported in [`Error::NoEncoding`].
    pub round: u32,
    pub n: u32,
    pub k: u32,
    pub l: u32,
    /// Weight cap for the raised words.
    pub budget: u32,
}

/// The search of [`search_block_encoding`] with an explicit weight cap.
pub fn search_with_budget(
    target: &SearchTarget,
    w: &[BitWord],
    x: &[BitWord],
) -> Result<(HashIndex, Vec<BitWord>)> {
    let SearchTarget { round, n, k, l, budget } = *target;
    let spec = FieldSpec::canonical(n)?;
    if l > k || k > n {
        return Err(Error::usage(format!("need l <= k <= n, got l={l} k={k} n={n}")));
    }
    let out_len = k - l;
    if w.is_empty() || x.len() != w.len() {
        return Err(Error::usage(format!("{} current words but {} messages", w.len(), x.len())));
    }
    if let Some(wi) = w.iter().find(|wi| wi.len() != n) {
        return Err(Error::usage(format!("current word {wi:?} is not {n} bits")));
    }
    if let Some(xi) = x.iter().find(|xi| xi.len() != out_len) {
        return Err(Error::usage(format!("message word of {} bits, expected {out_len}", xi.len())));
    }

    let candidates: Vec<Vec<u32>> = w
        .iter()
        .map(|wi| enumerate_above(wi, budget).into_iter().map(|y| y.bits() as u32).collect())
        .collect();
    if let Some(i) = candidates.iter().position(Vec::is_empty) {
        return Err(Error::NoEncoding { round, bottleneck: i, candidates: 0, targets: 1 << out_len });
    }
    let targets: Vec<u32> = x.iter().map(|xi| xi.bits() as u32).collect();
    let search = Search { spec, out_len, candidates: &candidates, targets: &targets };

    let Some((a, v)) = search.first_solution() else {
        let i = search.bottleneck();
        return Err(Error::NoEncoding {
            round,
            bottleneck: i,
            candidates: candidates[i].len() as u64,
            targets: 1 << out_len,
        });
    };
    let hash = HashIndex::new(spec.element(a)?, spec.element(v)?, k, l)?;
    let ys = candidates
        .iter()
        .zip(&targets)
        .map(|(ys, &xi)| {
            let y = ys
                .iter()
                .copied()
                .find(|&y| apply_raw(spec, a, v, y, out_len) as u32 == xi)
                .expect("v lies in every shift set");
            BitWord::from_raw(n, y as u64)
        })
        .collect();
    Ok((hash, ys))
}
