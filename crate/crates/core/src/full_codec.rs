//! Concatenation of `n1` independent basic blocks, packing of flat
//! bitstreams into per-block round messages, and a device-backed session.

use std::sync::Arc;

use bitvec::prelude::*;

use crate::block_codec::{self, BlockState, RoundMessage, RoundPayload};
use crate::capacity::{self, WomParams};
use crate::wom_device::{self, Cells, Device, ImageMeta};
use crate::{BitWord, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FullParams {
    block: Arc<WomParams>,
    n1: u64,
}

impl FullParams {
    pub fn new(block: WomParams, n1: u64) -> Result<Self> {
        if n1 == 0 {
            return Err(Error::usage("need at least one block"));
        }
        Ok(FullParams { block: Arc::new(block), n1 })
    }

    pub fn block(&self) -> &Arc<WomParams> {
        &self.block
    }

    pub fn n1(&self) -> u64 {
        self.n1
    }

    /// Total length `n1 * N_0`.
    pub fn total_len(&self) -> u64 {
        self.n1 * self.block.n0()
    }

    /// Bits a packed bitstream carries in `round`.
    pub fn round_capacity(&self, round: u32) -> u64 {
        self.n1 * self.block.m() * self.block.round_bits(round) as u64
    }
}

/// Rate of the concatenation, which equals the rate of one block.
pub fn full_rate(params: &FullParams) -> f64 {
    capacity::achieved_rate(&params.block)
}

/// The replication count `2^{4n/(a-1)}` that makes encoding time
/// `N_1^a`. Reported only; it is astronomically large for any useful `n`.
pub fn replication_count(n: u32, a: f64) -> Result<f64> {
    if a <= 1.0 {
        return Err(Error::usage(format!("exponent a = {a} must exceed 1")));
    }
    Ok(2f64.powf(4.0 * n as f64 / (a - 1.0)))
}

/// Encodes one round in every block. Either all blocks succeed or the
/// first error is returned and no state is produced.
pub fn full_encode_round(states: &[BlockState], msgs: &[RoundMessage]) -> Result<Vec<BlockState>> {
    if states.len() != msgs.len() || states.is_empty() {
        return Err(Error::usage(format!("{} blocks but {} messages", states.len(), msgs.len())));
    }
    let round = states[0].round();
    if states.iter().any(|s| s.round() != round) {
        return Err(Error::usage("blocks are at different rounds"));
    }
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        states.par_iter().zip(msgs).map(|(s, m)| block_codec::encode_round(s, m)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        states.iter().zip(msgs).map(|(s, m)| block_codec::encode_round(s, m)).collect()
    }
}

pub fn full_decode_round(states: &[BlockState], round: u32) -> Result<Vec<RoundMessage>> {
    states.iter().map(|s| block_codec::decode_round(s, round)).collect()
}

/// Splits the leading bits of `bits` into one message per block.
///
/// Round 1 reads `floor(log2 C(n, B_1))` bits per data word as a
/// little-endian rank; later rounds read `k_j - l` bits per data word.
/// Bits past the round capacity are ignored.
pub fn pack_messages(
    bits: &BitSlice<u8, Lsb0>,
    round: u32,
    params: &FullParams,
) -> Result<Vec<RoundMessage>> {
    let block = &params.block;
    if round == 0 || round > block.t() {
        return Err(Error::usage(format!("round {round} outside 1..={}", block.t())));
    }
    let need = params.round_capacity(round);
    if (bits.len() as u64) < need {
        return Err(Error::usage(format!("round {round} needs {need} message bits, got {}", bits.len())));
    }
    let width = block.round_bits(round) as usize;
    let mut chunks = bits[..need as usize].chunks(width.max(1));
    let mut take = || -> u64 {
        if width == 0 {
            0
        } else {
            chunks.next().expect("length checked").load_le::<u64>()
        }
    };
    (0..params.n1)
        .map(|_| {
            if round == 1 {
                Ok(RoundMessage::first((0..block.m()).map(|_| take()).collect()))
            } else {
                let words =
                    (0..block.m()).map(|_| BitWord::new(width as u32, take())).collect::<Result<_>>()?;
                RoundMessage::later(round, words)
            }
        })
        .collect()
}

/// Inverse of [`pack_messages`].
pub fn unpack_messages(msgs: &[RoundMessage], params: &FullParams) -> Result<Cells> {
    if msgs.len() as u64 != params.n1 {
        return Err(Error::usage(format!("{} messages for {} blocks", msgs.len(), params.n1)));
    }
    let mut out = Cells::new();
    for msg in msgs {
        msg.validate(&params.block)?;
        let width = params.block.round_bits(msg.round()) as usize;
        let values: Vec<u64> = match msg.payload() {
            RoundPayload::Subsets(ranks) => ranks.clone(),
            RoundPayload::Words(words) => words.iter().map(BitWord::bits).collect(),
        };
        for v in values {
            if width < 64 && v >> width != 0 {
                return Err(Error::usage(format!("value {v} does not fit the {width}-bit packing")));
            }
            let start = out.len();
            out.resize(start + width, false);
            if width > 0 {
                out[start..].store_le(v);
            }
        }
    }
    Ok(out)
}

/// Parses a hex bitstream (bytes LSB first); whitespace is ignored.
pub fn bits_from_hex(text: &str) -> Result<Cells> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bytes = hex::decode(&compact).map_err(|e| Error::usage(format!("bad hex message: {e}")))?;
    Ok(Cells::from_vec(bytes))
}

/// Renders bits as hex, zero-padding the last byte.
pub fn bits_to_hex(bits: &BitSlice<u8, Lsb0>) -> String {
    let mut owned = bits.to_bitvec();
    owned.force_align();
    owned.set_uninitialized(false);
    hex::encode(owned.as_raw_slice())
}

/// A write-once device holding `n1` blocks, with round bookkeeping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Session {
    params: FullParams,
    device: Device,
}

impl Session {
    pub fn new(params: FullParams) -> Result<Self> {
        // rejects analysis-scale parameters up front
        BlockState::fresh(params.block.clone())?;
        let device = Device::new(params.total_len() as usize);
        Ok(Session { params, device })
    }

    pub fn params(&self) -> &FullParams {
        &self.params
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn blocks(&self) -> Result<Vec<BlockState>> {
        let n0 = self.params.block.n0() as usize;
        self.device.cells().chunks(n0).map(|c| BlockState::load(self.params.block.clone(), c)).collect()
    }

    /// Rounds written so far.
    pub fn round(&self) -> u32 {
        let t = self.params.block.t() as usize;
        self.device.cells()[..t].count_ones() as u32
    }

    /// Encodes `msgs` (one per block) as the next round.
    pub fn write_messages(&mut self, msgs: &[RoundMessage]) -> Result<()> {
        let states = self.blocks()?;
        let next = full_encode_round(&states, msgs)?;
        let n0 = self.params.block.n0() as usize;
        let mut cells = bitvec![u8, Lsb0; 0; self.device.len()];
        for (b, state) in next.iter().enumerate() {
            state.store(&mut cells[b * n0..(b + 1) * n0])?;
        }
        self.device.apply_write(&cells)
    }

    /// Packs `bits` and writes them as round `round`.
    pub fn write_round(&mut self, round: u32, bits: &BitSlice<u8, Lsb0>) -> Result<()> {
        let current = self.round();
        if round != current + 1 {
            return Err(Error::Sequencing { current, requested: round });
        }
        let msgs = pack_messages(bits, round, &self.params)?;
        self.write_messages(&msgs)
    }

    pub fn read_messages(&self, round: u32) -> Result<Vec<RoundMessage>> {
        full_decode_round(&self.blocks()?, round)
    }

    /// Decodes round `round` back to the packed bitstream.
    pub fn read_round(&self, round: u32) -> Result<Cells> {
        unpack_messages(&self.read_messages(round)?, &self.params)
    }

    pub fn to_image(&self) -> Result<String> {
        let meta =
            ImageMeta { params: (*self.params.block).clone(), blocks: self.params.n1, round: self.round() };
        wom_device::save_image(&self.device, &meta)
    }

    pub fn from_image(text: &str) -> Result<Self> {
        let (device, meta) = wom_device::load_image(text)?;
        let params = FullParams::new(meta.params, meta.blocks)?;
        Ok(Session { params, device })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::WeightVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn block() -> WomParams {
        WomParams::manual(2, 10, 4, 2, vec![7], "1/3,1/2".parse::<WeightVector>().unwrap()).unwrap()
    }

    fn random_bits(rng: &mut ChaCha8Rng, len: u64) -> Cells {
        (0..len).map(|_| rng.gen::<bool>()).collect()
    }

    #[test]
    fn round1_consumption() {
        let p = FullParams::new(block(), 1).unwrap();
        // floor(log2 C(10, 3)) = floor(log2 120)
        assert_eq!(p.block().round_bits(1), 6);
        assert_eq!(p.round_capacity(1), 24);
        assert_eq!(p.round_capacity(2), 20);
    }

    #[test]
    fn empty_capacity_round() {
        let b = WomParams::manual(2, 8, 2, 3, vec![3], "1/4,1/2".parse().unwrap()).unwrap();
        let p = FullParams::new(b, 2).unwrap();
        assert_eq!(p.round_capacity(2), 0);
        let msgs = pack_messages(&Cells::new(), 2, &p).unwrap();
        assert_eq!(msgs.len(), 2);
        assert!(unpack_messages(&msgs, &p).unwrap().is_empty());
    }

    #[test]
    fn pack_unpack_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n1 in [1u64, 3] {
            let p = FullParams::new(block(), n1).unwrap();
            for _ in 0..100 {
                for round in 1..=2 {
                    let bits = random_bits(&mut rng, p.round_capacity(round));
                    let msgs = pack_messages(&bits, round, &p).unwrap();
                    assert_eq!(unpack_messages(&msgs, &p).unwrap(), bits);
                }
            }
        }
    }

    #[test]
    fn pack_errors() {
        let p = FullParams::new(block(), 2).unwrap();
        let short = Cells::repeat(false, 47);
        match pack_messages(&short, 1, &p) {
            Err(Error::Usage(msg)) => assert!(msg.contains("48")),
            other => panic!("{other:?}"),
        }
        assert!(pack_messages(&short, 3, &p).is_err());
        // a rank above the packed range cannot be unpacked
        let msg = RoundMessage::first(vec![100, 0, 0, 0]);
        assert!(unpack_messages(&[msg.clone(), msg], &p).is_err());
    }

    #[test]
    fn rate_independent_of_replication() {
        let rates: Vec<f64> =
            [1u64, 2, 8].iter().map(|&n1| full_rate(&FullParams::new(block(), n1).unwrap())).collect();
        assert!(rates.iter().all(|&r| r == capacity::achieved_rate(&block())));
        assert_eq!(replication_count(8, 2.0).unwrap(), 2f64.powi(32));
        assert!(replication_count(8, 1.0).is_err());
    }

    #[test]
    fn arity_mismatch() {
        let p = Arc::new(block());
        let s = BlockState::fresh(p).unwrap();
        let m = RoundMessage::first(vec![0; 4]);
        assert!(matches!(full_encode_round(&[s.clone(), s], &[m]), Err(Error::Usage(_))));
    }

    #[test]
    fn single_block_matches_block_codec() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = FullParams::new(block(), 1).unwrap();
        let mut s = BlockState::fresh(p.block().clone()).unwrap();
        let mut session = Session::new(p.clone()).unwrap();
        for round in 1..=2 {
            let bits = random_bits(&mut rng, p.round_capacity(round));
            let msgs = pack_messages(&bits, round, &p).unwrap();
            s = block_codec::encode_round(&s, &msgs[0]).unwrap();
            session.write_round(round, &bits).unwrap();
            assert_eq!(session.blocks().unwrap(), vec![s.clone()]);
        }
    }

    #[test]
    fn session_roundtrip_four_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = FullParams::new(block(), 4).unwrap();
        for _ in 0..50 {
            let mut session = Session::new(p.clone()).unwrap();
            for round in 1..=2 {
                let bits = random_bits(&mut rng, p.round_capacity(round));
                session.write_round(round, &bits).unwrap();
                assert_eq!(session.read_round(round).unwrap(), bits);
            }
            let again = Session::from_image(&session.to_image().unwrap()).unwrap();
            assert_eq!(again, session);
        }
    }

    #[test]
    fn session_sequencing() {
        let p = FullParams::new(block(), 2).unwrap();
        let mut session = Session::new(p.clone()).unwrap();
        let bits = Cells::repeat(true, 64);
        assert_eq!(session.write_round(2, &bits), Err(Error::Sequencing { current: 0, requested: 2 }));
        assert_eq!(session.read_round(1), Err(Error::DecodeRound { current: 0, requested: 1 }));
        session.write_round(1, &bits).unwrap();
        assert_eq!(session.write_round(1, &bits), Err(Error::Sequencing { current: 1, requested: 1 }));
    }

    #[test]
    fn hex_bits() {
        let bits = bits_from_hex("01 8f\n").unwrap();
        assert_eq!(bits.len(), 16);
        assert!(bits[0] && !bits[1] && bits[8] && bits[15]);
        assert_eq!(bits_to_hex(&bits[..9]), "0101");
        assert!(bits_from_hex("0g").is_err());
    }

    #[test]
    fn corruption_stays_in_its_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = FullParams::new(block(), 3).unwrap();
        let n0 = p.block().n0() as usize;
        for target in 0..3 {
            let mut session = Session::new(p.clone()).unwrap();
            for round in 1..=2 {
                session.write_round(round, &random_bits(&mut rng, p.round_capacity(round))).unwrap();
            }
            let clean = session.read_messages(2).unwrap();
            // program one more cell in a data word, then in the hash index, of the target block
            for region in [p.block().data_offset(1), p.block().side_offset(2)] {
                let base = target * n0 + region as usize;
                let cells = session.device().cells();
                let Some(off) = (base..base + p.block().n() as usize).find(|&i| !cells[i]) else {
                    continue;
                };
                let mut next = cells.to_bitvec();
                next.set(off, true);
                let mut hit = session.clone();
                hit.device.apply_write(&next).unwrap();
                // through the image format, so the checksum is recomputed
                let hit = Session::from_image(&hit.to_image().unwrap()).unwrap();
                let got = hit.read_messages(2).unwrap();
                for b in 0..3 {
                    if b != target {
                        assert_eq!(got[b], clean[b], "block {b} changed by corrupting block {target}");
                    }
                }
            }
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]
        #[test]
        fn codec_never_clears_a_cell(seed in proptest::prelude::any::<u64>(), three in proptest::prelude::any::<bool>()) {
            let block = if three { crate::selftest::three_write_params() } else { super::tests::block() };
            let p = FullParams::new(block, 3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut session = Session::new(p.clone()).unwrap();
            for round in 1..=p.block().t() {
                let before = session.device().cells().to_bitvec();
                let bits = random_bits(&mut rng, p.round_capacity(round));
                // a violation would surface here as WriteOnceViolation
                session.write_round(round, &bits).unwrap();
                let after = session.device().cells();
                proptest::prop_assert!(before.iter().zip(after.iter()).all(|(a, b)| !*a || *b));
                proptest::prop_assert_eq!(session.read_round(round).unwrap(), bits);
            }
        }
    }
}
