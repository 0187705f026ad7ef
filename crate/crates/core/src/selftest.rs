//! Acceptance checks, shared by the `acceptance` test target and
//! `womkit selftest`.
//!
//! Each check recomputes its expectations with an oracle that does not go
//! through the code under test: brute-force filters instead of the subset
//! generator, shift-and-add multiplication instead of carry-less products,
//! trial division instead of the gcd irreducibility test, and direct
//! postcondition checks instead of trusting the search.

use std::fmt;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitwords::{self, count_above, enumerate_above, subset_rank, subset_unrank, BitWord};
use crate::block_codec::{self, in_guaranteed_regime_with, SearchTarget};
use crate::capacity::{self, WeightVector, WomParams};
use crate::full_codec::{FullParams, Session};
use crate::gf2n::FieldSpec;
use crate::hashfam;
use crate::wom_device::Cells;
use crate::Error;

#[derive(Clone, Debug)]
pub struct CriterionReport {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {} ({:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

type Outcome = std::result::Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, name: "capacity arithmetic", limit: Duration::from_secs(1), run: capacity_arithmetic },
    Criterion { id: 2, name: "two-write codec", limit: Duration::from_secs(30), run: two_write_codec },
    Criterion { id: 3, name: "three-write codec", limit: Duration::from_secs(120), run: three_write_codec },
    Criterion { id: 4, name: "image fraction audit", limit: Duration::from_secs(120), run: image_fraction },
    Criterion {
        id: 5,
        name: "leftover hash distance",
        limit: Duration::from_secs(60),
        run: leftover_distance,
    },
    Criterion {
        id: 6,
        name: "guaranteed-regime search",
        limit: Duration::from_secs(600),
        run: guaranteed_search,
    },
    Criterion { id: 7, name: "parameter formulas", limit: Duration::from_secs(1), run: parameter_formulas },
    Criterion {
        id: 8,
        name: "field and combinatorics",
        limit: Duration::from_secs(60),
        run: field_and_combinatorics,
    },
    Criterion { id: 9, name: "persistence", limit: Duration::from_secs(60), run: persistence },
    Criterion { id: 10, name: "determinism", limit: Duration::from_secs(300), run: determinism },
];

pub fn criterion_ids() -> Vec<u32> {
    CRITERIA.iter().map(|c| c.id).collect()
}

/// Runs one criterion; `None` for an unknown id.
pub fn run(id: u32) -> Option<CriterionReport> {
    let c = CRITERIA.iter().find(|c| c.id == id)?;
    let start = Instant::now();
    let outcome = (c.run)();
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    if elapsed > c.limit {
        passed = false;
        detail = format!("{detail}; exceeded {}s limit", c.limit.as_secs());
    }
    Some(CriterionReport { id: c.id, name: c.name, passed, detail, elapsed })
}

pub fn run_all() -> Vec<CriterionReport> {
    CRITERIA.iter().filter_map(|c| run(c.id)).collect()
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn seeded(id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x574f_4d00 + id)
}

fn weights(s: &str) -> WeightVector {
    s.parse().expect("literal weight vector")
}

pub fn two_write_params() -> WomParams {
    WomParams::manual(2, 10, 4, 2, vec![7], weights("1/3,1/2")).expect("valid literal params")
}

pub fn three_write_params() -> WomParams {
    WomParams::manual(3, 12, 3, 2, vec![8, 6], weights("1/4,1/3,1/2")).expect("valid literal params")
}

fn random_bits(rng: &mut ChaCha8Rng, len: u64) -> Cells {
    (0..len).map(|_| rng.gen::<bool>()).collect()
}

fn capacity_arithmetic() -> Outcome {
    let mut worst = 0.0f64;
    for t in 1..=10u32 {
        let (rates, p) = capacity::optimal_point(t).map_err(|e| e.to_string())?;
        // rates written out independently: (t+2-j)/(t+1) * H(1/(t+2-j)), then 2/(t+1)
        let mut sum = 2.0 / (t as f64 + 1.0);
        for j in 1..t {
            let d = (t + 2 - j) as f64;
            let q = 1.0 / d;
            sum += d / (t as f64 + 1.0) * (-(q * q.log2()) - (1.0 - q) * (1.0 - q).log2());
        }
        ensure!((sum - rates.sum()).abs() < 1e-12, "t={t}: rates disagree with closed form");
        let gap = (rates.sum() - ((t + 1) as f64).log2()).abs();
        worst = worst.max(gap);
        ensure!(gap < 1e-9, "t={t}: sum {} vs log2({})", rates.sum(), t + 1);
        ensure!(capacity::in_capacity_region(&rates, &p).unwrap_or(false), "t={t}: optimum outside region");
    }
    Ok(format!("sum-rate = log2(t+1) for t=1..10, worst gap {worst:.1e}"))
}

/// Runs `sessions` random full write sequences and checks every round.
fn codec_sessions(params: WomParams, sessions: usize, seed: u64) -> Result<Vec<String>, String> {
    let mut rng = seeded(seed);
    let full = FullParams::new(params, 1).map_err(|e| e.to_string())?;
    let block = full.block().clone();
    let mut images = Vec::with_capacity(sessions);
    let mut violations = 0;
    for s in 0..sessions {
        let mut session = Session::new(full.clone()).map_err(|e| e.to_string())?;
        let mut last_weight = 0;
        for round in 1..=block.t() {
            let bits = random_bits(&mut rng, full.round_capacity(round));
            match session.write_round(round, &bits) {
                Ok(()) => {}
                Err(Error::WriteOnceViolation { .. }) => {
                    violations += 1;
                    break;
                }
                Err(e) => return Err(format!("session {s} round {round}: {e}")),
            }
            let weight = session.device().weight();
            ensure!(weight >= last_weight, "session {s}: device weight decreased");
            last_weight = weight;
            let decoded = session.read_round(round).map_err(|e| e.to_string())?;
            ensure!(decoded == bits, "session {s} round {round}: decoded message differs");
            for state in session.blocks().map_err(|e| e.to_string())? {
                for y in state.data() {
                    ensure!(
                        y.weight() <= block.budget(round),
                        "session {s} round {round}: weight {} over budget {}",
                        y.weight(),
                        block.budget(round)
                    );
                }
            }
        }
        images.push(session.to_image().map_err(|e| e.to_string())?);
    }
    ensure!(violations == 0, "{violations} write-once violations");
    Ok(images)
}

fn two_write_codec() -> Outcome {
    let p = two_write_params();
    ensure!(p.budgets()[0] == 3, "B_1 = {} (expected 3)", p.budgets()[0]);
    codec_sessions(p, 100, 2)?;
    Ok("100 two-round sequences round-trip at n=10 m=4 l=2 k2=7 B1=3, 0 violations".into())
}

fn three_write_codec() -> Outcome {
    codec_sessions(three_write_params(), 50, 3)?;
    Ok("50 three-round sequences round-trip at n=12 m=3 p=(1/4,1/3,1/2), 0 violations".into())
}

fn random_set(rng: &mut ChaCha8Rng, n: u32, size: usize) -> Vec<BitWord> {
    sample(rng, 1 << n, size)
        .into_iter()
        .map(|y| BitWord::new(n, y as u64).expect("sampled below 2^n"))
        .collect()
}

fn image_fraction() -> Outcome {
    let mut rng = seeded(4);
    let sets: Vec<_> = (0..10).map(|_| random_set(&mut rng, 8, 64)).collect();
    let worst = hashfam::image_fraction_audit(8, 6, 4, &sets).map_err(|e| e.to_string())?;
    ensure!(worst <= 0.5, "worst bad fraction {worst} > 2^-1");
    Ok(format!("worst bad-H fraction {worst:.5} <= 0.5 over 10 sets, all 2^16 (a,b)"))
}

fn leftover_distance() -> Outcome {
    let mut rng = seeded(5);
    let cube = |n: u32| -> Vec<BitWord> { (0..1u64 << n).map(|y| BitWord::new(n, y).unwrap()).collect() };
    let mut cases: Vec<(u32, u32, u32, Vec<BitWord>)> = vec![(4, 4, 4, cube(4)), (4, 4, 2, cube(4))];
    for _ in 0..5 {
        cases.push((6, 4, 2, random_set(&mut rng, 6, 16)));
    }
    let mut worst_ratio = 0.0f64;
    for (n, k, l, set) in &cases {
        let d = hashfam::lhl_exact_distance(*n, *k, *l, set).map_err(|e| e.to_string())?;
        let bound = 2f64.powf(-(*l as f64) / 2.0);
        ensure!(d <= bound, "n={n} k={k} l={l}: distance {d} > {bound}");
        if *l == *k {
            ensure!(d == 0.0, "empty output should be exactly uniform, got {d}");
        }
        worst_ratio = worst_ratio.max(d / bound);
    }
    Ok(format!("{} instances within 2^(-l/2), worst distance/bound {worst_ratio:.3}", cases.len()))
}

/// Largest m with m < 2^{l/4}.
fn max_blocks(l: u32) -> u64 {
    let bound = 2f64.powf(l as f64 / 4.0);
    let m = bound.ceil() as u64 - 1;
    m.min(8)
}

fn guaranteed_search() -> Outcome {
    let mut rng = seeded(6);
    let mut done = 0;
    let mut attempts = 0;
    let mut nontrivial = 0;
    while done < 200 {
        attempts += 1;
        ensure!(attempts < 100_000, "could not generate instances");
        let n = rng.gen_range(6..=12u32);
        let l = rng.gen_range(4..=n - 1);
        let m = rng.gen_range(1..=max_blocks(l));
        let k = rng.gen_range(l + 1..=n);
        let w: Vec<BitWord> = (0..m)
            .map(|_| {
                let wt = rng.gen_range(0..=n / 3);
                subset_unrank(rng.gen_range(0..bitwords::binomial(n, wt)), n, wt).unwrap()
            })
            .collect();
        // least budget giving every word at least 2^k candidates
        let Some(budget) = (0..=n).find(|&b| w.iter().all(|wi| count_above(wi, b) >= 1 << k)) else {
            continue;
        };
        let target = SearchTarget { round: 2, n, k, l, budget };
        ensure!(in_guaranteed_regime_with(&target, m, &w), "generator left the guaranteed regime");
        let out = k - l;
        let x: Vec<BitWord> =
            (0..m).map(|_| BitWord::new(out, rng.gen_range(0..1u64 << out)).unwrap()).collect();
        let (h, ys) = block_codec::search_with_budget(&target, &w, &x)
            .map_err(|e| format!("n={n} k={k} l={l} m={m} budget={budget}: {e}"))?;
        // postconditions checked with a shift-and-add evaluation of a*y + b
        let spec = FieldSpec::canonical(n).unwrap();
        for ((wi, xi), yi) in w.iter().zip(&x).zip(&ys) {
            ensure!(yi.bits() & wi.bits() == wi.bits(), "y does not dominate w");
            ensure!(yi.weight() <= budget, "y over budget");
            let value = oracle_mul(h.a().coeffs(), yi.bits() as u32, spec.modulus(), n) ^ h.b().coeffs();
            ensure!(value as u64 & ((1u64 << out) - 1) == xi.bits(), "H(y) != x");
        }
        done += 1;
        if m >= 2 && out > 0 {
            nontrivial += 1;
        }
    }
    ensure!(nontrivial >= 50, "only {nontrivial} instances had m >= 2 and k > l");
    Ok(format!(
        "{done} instances with |Y_i| >= 2^k and m < 2^(l/4) all solved ({nontrivial} with m >= 2, k > l)"
    ))
}

fn parameter_formulas() -> Outcome {
    let (rates, p) = capacity::optimal_point(2).map_err(|e| e.to_string())?;
    let params = capacity::derive_parameters(0.5, 2, &rates, &p).map_err(|e| e.to_string())?;
    ensure!(params.c() == Some(40), "c = {:?}", params.c());
    ensure!(params.n() == 320, "n = {}", params.n());
    let rate = capacity::achieved_rate(&params);
    let floor = 3f64.log2() - 0.5;
    ensure!(rate >= floor, "achieved rate {rate} < {floor}");
    let ratio = (params.m() * params.n() as u64) as f64 / params.n0() as f64;
    ensure!(ratio > 1.0 - 0.5 / 6.0, "mn/N0 = {ratio}");
    Ok(format!(
        "c=40 n=320 l={} m={} N0={} rate {rate:.4} >= {floor:.4}, mn/N0 {ratio:.4} > {:.4}",
        params.l(),
        params.m(),
        params.n0(),
        1.0 - 0.5 / 6.0
    ))
}

fn oracle_mul(mut x: u32, mut y: u32, modulus: u32, n: u32) -> u32 {
    let mut acc = 0;
    while y != 0 {
        if y & 1 == 1 {
            acc ^= x;
        }
        y >>= 1;
        x <<= 1;
        if x >> n & 1 == 1 {
            x ^= modulus;
        }
    }
    acc
}

fn oracle_irreducible(f: u64) -> bool {
    let deg = 63 - f.leading_zeros();
    let rem = |mut a: u64, d: u64| {
        let dd = 63 - d.leading_zeros();
        while a != 0 && 63 - a.leading_zeros() >= dd {
            a ^= d << (63 - a.leading_zeros() - dd);
        }
        a
    };
    (2u64..1 << (deg / 2 + 1)).all(|d| rem(f, d) != 0)
}

fn field_and_combinatorics() -> Outcome {
    let mut rng = seeded(8);
    for n in [3u32, 8, 12, 16] {
        let spec = FieldSpec::canonical(n).map_err(|e| e.to_string())?;
        ensure!(oracle_irreducible(spec.modulus() as u64), "n={n}: modulus reducible");
        let el = |c: u32| spec.element(c).unwrap();
        for _ in 0..10_000 {
            let [x, y, z] = [0; 3].map(|_| rng.gen::<u32>() & spec.mask());
            ensure!(
                spec.mul_raw(x, y) == oracle_mul(x, y, spec.modulus(), n),
                "n={n}: {x}*{y} disagrees with shift-and-add"
            );
            let (ex, ey, ez) = (el(x), el(y), el(z));
            let xy = ex.mul(&ey).unwrap();
            ensure!(xy == ey.mul(&ex).unwrap(), "n={n}: mul not commutative");
            ensure!(
                xy.mul(&ez).unwrap() == ex.mul(&ey.mul(&ez).unwrap()).unwrap(),
                "n={n}: mul not associative"
            );
            ensure!(
                ex.mul(&ey.add(&ez).unwrap()).unwrap() == xy.add(&ex.mul(&ez).unwrap()).unwrap(),
                "n={n}: not distributive"
            );
            if x != 0 {
                ensure!(ex.pow(spec.order() - 1) == spec.one(), "n={n}: Fermat fails for {x}");
            }
        }
    }
    for n in 2..=24 {
        let m = FieldSpec::canonical(n).map_err(|e| e.to_string())?.modulus() as u64;
        ensure!(oracle_irreducible(m), "n={n}: canonical modulus reducible");
    }

    // colex order of subsets is increasing order of their masks
    for len in 0..=16u32 {
        for weight in 0..=4.min(len) {
            let mut rank = 0u64;
            for mask in (0..1u64 << len).filter(|m| m.count_ones() == weight) {
                let word = BitWord::new(len, mask).unwrap();
                ensure!(subset_rank(&word, weight) == Ok(rank), "rank of {mask:#b} (len {len})");
                ensure!(subset_unrank(rank, len, weight) == Ok(word), "unrank {rank} (len {len})");
                rank += 1;
            }
            ensure!(rank == bitwords::binomial(len, weight), "C({len},{weight}) count");
        }
    }

    for len in 0..=14u32 {
        let all = 1u64 << len;
        for w in 0..all {
            let supersets: Vec<u64> = (0..all).filter(|y| y & w == w).collect();
            let word = BitWord::new(len, w).unwrap();
            for budget in 0..=len {
                let expected = supersets.iter().filter(|y| y.count_ones() <= budget);
                let got = enumerate_above(&word, budget);
                ensure!(
                    got.iter().map(BitWord::bits).eq(expected.copied()),
                    "enumerate_above({w:#b}, {budget}) at len {len}"
                );
            }
        }
    }
    Ok("axioms+Fermat on 4x10^4 triples, colex bijection len<=16 w<=4, enumeration len<=14".into())
}

fn persistence() -> Outcome {
    let mut rng = seeded(9);
    let full = FullParams::new(two_write_params(), 1).map_err(|e| e.to_string())?;

    let fresh = Session::new(full.clone()).map_err(|e| e.to_string())?;
    let text = fresh.to_image().map_err(|e| e.to_string())?;
    let back = Session::from_image(&text).map_err(|e| e.to_string())?;
    ensure!(back == fresh, "fresh image does not round-trip");
    ensure!(back.to_image().as_deref() == Ok(text.as_str()), "fresh image not byte-stable");

    let mut session = fresh;
    let r1 = random_bits(&mut rng, full.round_capacity(1));
    session.write_round(1, &r1).map_err(|e| e.to_string())?;
    let mid = session.to_image().map_err(|e| e.to_string())?;

    let flipped = flip_payload_digit(&mid);
    match Session::from_image(&flipped) {
        Err(Error::Image(crate::error::ImageError::Checksum { .. })) => {}
        other => return Err(format!("corrupted image not rejected by checksum: {other:?}")),
    }

    let r2 = random_bits(&mut rng, full.round_capacity(2));
    let mut resumed = Session::from_image(&mid).map_err(|e| e.to_string())?;
    ensure!(resumed == session, "mid-session image does not round-trip");
    session.write_round(2, &r2).map_err(|e| e.to_string())?;
    resumed.write_round(2, &r2).map_err(|e| e.to_string())?;
    let a = session.to_image().map_err(|e| e.to_string())?;
    let b = resumed.to_image().map_err(|e| e.to_string())?;
    ensure!(a == b, "resumed session diverged");
    ensure!(resumed.read_round(2).ok() == Some(r2), "resumed session decodes wrongly");
    Ok("fresh and mid-session images round-trip, CRC catches a flipped digit, resume is bit-identical".into())
}

/// Changes one hex digit of the first data line.
fn flip_payload_digit(text: &str) -> String {
    let at = text.find("\ndata1=").expect("data line") + "\ndata1=".len();
    let mut bytes = text.as_bytes().to_vec();
    bytes[at] = if bytes[at] == b'0' { b'1' } else { b'0' };
    String::from_utf8(bytes).expect("ascii")
}

fn determinism() -> Outcome {
    let digest = |images: &[String]| crc32fast::hash(images.concat().as_bytes());
    let a2 = codec_sessions(two_write_params(), 100, 2)?;
    let b2 = codec_sessions(two_write_params(), 100, 2)?;
    ensure!(a2 == b2, "two-write images differ between runs");
    let a3 = codec_sessions(three_write_params(), 50, 3)?;
    let b3 = codec_sessions(three_write_params(), 50, 3)?;
    ensure!(a3 == b3, "three-write images differ between runs");
    Ok(format!("150 sessions byte-identical across runs (digests {:08x}, {:08x})", digest(&a2), digest(&a3)))
}
