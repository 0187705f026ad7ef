//! Binary entropy, the t-write capacity region, and the parameter formulas
//! that turn a target rate point and slack `epsilon` into block dimensions.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive};

use crate::bitwords::binomial;
use crate::gf2n;
use crate::{Error, Result};

/// Absolute slack when comparing rates against region boundaries, so points
/// computed in floating point on the boundary (such as the optimum) count
/// as inside.
pub const REGION_TOLERANCE: f64 = 1e-9;

/// Denominator used when a weight computed in floating point has to become
/// an exact rational.
const WEIGHT_GRID: u64 = 1 << 40;

/// Largest `n` at which the exhaustive hash search is run.
pub const DESK_MAX_N: u32 = gf2n::MAX_DEGREE;

pub fn entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::usage(format!("entropy argument {p} outside [0, 1]")));
    }
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    Ok(term(p) + term(1.0 - p))
}

/// The unique `p` in [0, 1/2] with `entropy(p) == h`, by bisection.
pub fn inverse_entropy(h: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::usage(format!("entropy value {h} outside [0, 1]")));
    }
    if h == 0.0 {
        return Ok(0.0);
    }
    if h == 1.0 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    // 60 halvings take the bracket well below 1e-15
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if entropy(mid)? < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// log2 C(n, k) evaluated as a sum, valid for any n.
pub fn log2_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).log2()).sum()
}

/// Per-round rates in bits per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct RatePoint {
    rates: Vec<f64>,
}

impl RatePoint {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::usage("a rate point needs at least one round"));
        }
        if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::usage(format!("rate {r} is not a nonnegative number")));
        }
        Ok(RatePoint { rates })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn rounds(&self) -> u32 {
        self.rates.len() as u32
    }

    pub fn sum(&self) -> f64 {
        self.rates.iter().sum()
    }
}

/// Fresh-write densities `(p_1, .., p_{t-1}, 1/2)` as exact rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightVector {
    p: Vec<Ratio<u64>>,
}

impl WeightVector {
    pub fn new(p: Vec<Ratio<u64>>) -> Result<Self> {
        let half = Ratio::new(1, 2);
        match p.last() {
            None => return Err(Error::usage("a weight vector needs at least one entry")),
            Some(last) if *last != half => {
                return Err(Error::usage(format!("last weight must be 1/2, got {last}")))
            }
            _ => {}
        }
        if let Some(bad) = p.iter().find(|x| **x > half) {
            return Err(Error::usage(format!("weight {bad} exceeds 1/2")));
        }
        Ok(WeightVector { p })
    }

    /// Builds `(p_1, .., p_{t-1})` followed by the fixed last entry 1/2.
    pub fn with_final_half(mut head: Vec<Ratio<u64>>) -> Result<Self> {
        head.push(Ratio::new(1, 2));
        Self::new(head)
    }

    pub fn entries(&self) -> &[Ratio<u64>] {
        &self.p
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.p.iter().map(ratio_f64).collect()
    }

    pub fn rounds(&self) -> u32 {
        self.p.len() as u32
    }

    /// B_j = floor((1 - prod_{i<=j}(1 - p_i)) * n) for j = 1..=t.
    pub fn budgets(&self, n: u32) -> Vec<u32> {
        let mut keep = BigRational::one();
        self.p
            .iter()
            .map(|p| {
                let p = BigRational::new(BigInt::from(*p.numer()), BigInt::from(*p.denom()));
                keep = &keep * (BigRational::one() - p);
                let budget = (BigRational::one() - &keep) * BigInt::from(n);
                budget.floor().to_integer().to_u32().expect("budget is at most n")
            })
            .collect()
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.p.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}/{}", p.numer(), p.denom())?;
        }
        Ok(())
    }
}

impl FromStr for WeightVector {
    type Err = Error;

    /// Parses `num/den,num/den,...`; a bare integer is read as `x/1`.
    fn from_str(s: &str) -> Result<Self> {
        let p = s
            .split(',')
            .map(|item| {
                let item = item.trim();
                let (num, den) = item.split_once('/').unwrap_or((item, "1"));
                let num: u64 = num.trim().parse().map_err(|_| bad_ratio(item))?;
                let den: u64 = den.trim().parse().map_err(|_| bad_ratio(item))?;
                if den == 0 {
                    return Err(bad_ratio(item));
                }
                Ok(Ratio::new(num, den))
            })
            .collect::<Result<Vec<_>>>()?;
        WeightVector::new(p)
    }
}

fn bad_ratio(item: &str) -> Error {
    Error::usage(format!("cannot parse weight {item:?} as num/den"))
}

fn ratio_f64(r: &Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Smallest grid rational that is not below `x`.
fn ratio_at_least(x: f64) -> Ratio<u64> {
    Ratio::new((x * WEIGHT_GRID as f64).ceil() as u64, WEIGHT_GRID)
}

/// The sum-rate optimum of the t-write region, with its weight vector
/// `(1/(t+1), 1/t, .., 1/3, 1/2)`. The rates sum to log2(t + 1).
pub fn optimal_point(t: u32) -> Result<(RatePoint, WeightVector)> {
    if t == 0 {
        return Err(Error::usage("t must be at least 1"));
    }
    let tf = t as f64;
    let mut rates = Vec::with_capacity(t as usize);
    let mut weights = Vec::with_capacity(t as usize);
    for j in 1..t {
        let d = (t + 2 - j) as u64;
        rates.push(d as f64 / (tf + 1.0) * entropy(1.0 / d as f64)?);
        weights.push(Ratio::new(1, d));
    }
    rates.push(2.0 / (tf + 1.0));
    Ok((RatePoint::new(rates)?, WeightVector::with_final_half(weights)?))
}

pub fn in_capacity_region(rates: &RatePoint, p: &WeightVector) -> Result<bool> {
    if rates.rounds() != p.rounds() {
        return Err(Error::usage(format!("{} rates but {} weights", rates.rounds(), p.rounds())));
    }
    let p = p.as_f64();
    let t = p.len();
    let mut keep = 1.0;
    for (j, (r, pj)) in rates.rates().iter().zip(&p).enumerate() {
        let bound = if j + 1 == t { keep } else { keep * entropy(*pj)? };
        if *r > bound + REGION_TOLERANCE {
            return Ok(false);
        }
        keep *= 1.0 - pj;
    }
    Ok(true)
}

/// The least-weight vector (rounded up onto a rational grid) under which
/// `rates` lies in the capacity region.
pub fn weights_for_rates(rates: &RatePoint) -> Result<WeightVector> {
    let t = rates.rates().len();
    let mut keep = 1.0;
    let mut head = Vec::with_capacity(t);
    for r in &rates.rates()[..t - 1] {
        let h = r / keep;
        if h > 1.0 + REGION_TOLERANCE {
            return Err(Error::usage(format!("rate {r} is not achievable in this round")));
        }
        let mut p = ratio_at_least(inverse_entropy(h.min(1.0))?);
        if p > Ratio::new(1, 2) {
            p = Ratio::new(1, 2);
        }
        keep *= 1.0 - ratio_f64(&p);
        head.push(p);
    }
    let p = WeightVector::with_final_half(head)?;
    if !in_capacity_region(rates, &p)? {
        return Err(Error::usage("rate point lies outside the capacity region"));
    }
    Ok(p)
}

/// Dimensions of one basic block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WomParams {
    t: u32,
    n: u32,
    m: u64,
    l: u32,
    k: Vec<u32>,
    p: WeightVector,
    budgets: Vec<u32>,
    c: Option<u32>,
}

impl WomParams {
    /// Parameters chosen by hand; `k` lists k_2..k_t.
    pub fn manual(t: u32, n: u32, m: u64, l: u32, k: Vec<u32>, p: WeightVector) -> Result<Self> {
        Self::build(t, n, m, l, k, p, None)
    }

    fn build(t: u32, n: u32, m: u64, l: u32, k: Vec<u32>, p: WeightVector, c: Option<u32>) -> Result<Self> {
        if t == 0 {
            return Err(Error::usage("t must be at least 1"));
        }
        if n == 0 {
            return Err(Error::usage("n must be at least 1"));
        }
        if m == 0 {
            return Err(Error::usage("m must be at least 1"));
        }
        if k.len() != t as usize - 1 {
            return Err(Error::usage(format!("expected {} values of k, got {}", t - 1, k.len())));
        }
        if p.rounds() != t {
            return Err(Error::usage(format!("expected {t} weights, got {}", p.rounds())));
        }
        if let Some(kj) = k.iter().find(|&&kj| kj < l || kj > n) {
            return Err(Error::usage(format!("k = {kj} outside [l, n] = [{l}, {n}]")));
        }
        let budgets = p.budgets(n);
        Ok(WomParams { t, n, m, l, k, p, budgets, c })
    }

    pub fn t(&self) -> u32 {
        self.t
    }
    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn m(&self) -> u64 {
        self.m
    }
    pub fn l(&self) -> u32 {
        self.l
    }
    /// k_2..k_t.
    pub fn k(&self) -> &[u32] {
        &self.k
    }
    pub fn weights(&self) -> &WeightVector {
        &self.p
    }
    /// Cumulative weight budgets B_1..B_t.
    pub fn budgets(&self) -> &[u32] {
        &self.budgets
    }
    /// The integer constant when the parameters came from [`derive_parameters`].
    pub fn c(&self) -> Option<u32> {
        self.c
    }

    /// k_j for round `j >= 2`.
    pub fn k_for(&self, round: u32) -> u32 {
        self.k[round as usize - 2]
    }

    /// B_j for round `j >= 1`.
    pub fn budget(&self, round: u32) -> u32 {
        self.budgets[round as usize - 1]
    }

    /// Message bits per data block in round `j >= 2`.
    pub fn hash_output_len(&self, round: u32) -> u32 {
        self.k_for(round) - self.l
    }

    /// Block length: t header cells, m data blocks, t - 1 side blocks of 2n.
    pub fn n0(&self) -> u64 {
        self.t as u64 + 2 * self.n as u64 * (self.t as u64 - 1) + self.m * self.n as u64
    }

    pub fn data_offset(&self, i: u64) -> u64 {
        self.t as u64 + i * self.n as u64
    }

    pub fn side_offset(&self, round: u32) -> u64 {
        self.t as u64 + self.m * self.n as u64 + (round as u64 - 2) * 2 * self.n as u64
    }

    /// True when the block can actually be encoded (exhaustive search over
    /// GF(2^n) and words that fit 64 bits).
    pub fn desk_executable(&self) -> bool {
        (gf2n::MIN_DEGREE..=DESK_MAX_N).contains(&self.n) && self.n0() <= u32::MAX as u64
    }

    /// Bits of payload each data block carries in round `j` when messages
    /// are packed from a bitstream.
    pub fn round_bits(&self, round: u32) -> u32 {
        if round == 1 {
            let b1 = self.budget(1);
            if self.n <= 64 {
                63 - binomial(self.n, b1).leading_zeros()
            } else {
                log2_binomial(self.n as u64, b1 as u64).floor() as u32
            }
        } else {
            self.hash_output_len(round)
        }
    }
}

/// Applies the block-length formulas for a target `epsilon` below the sum rate.
///
/// `c` is the least integer above 20 with `6 t^2 < (t/eps)^(c/12 - 1)`, then
/// `n = ceil(c t log2(t/eps) / eps)`, `l = ceil(eps n / 3t)`,
/// `m = 2^floor(l/4) - 1` and `k_j = floor((R_j - eps/3t) n)`.
pub fn derive_parameters(epsilon: f64, t: u32, rates: &RatePoint, p: &WeightVector) -> Result<WomParams> {
    if t == 0 || rates.rounds() != t {
        return Err(Error::usage(format!("need t >= 1 rates, got {} for t = {t}", rates.rounds())));
    }
    if !in_capacity_region(rates, p)? {
        return Err(Error::usage("rate point lies outside the capacity region"));
    }
    if !(epsilon > 0.0 && epsilon < rates.sum()) {
        return Err(Error::usage(format!(
            "epsilon {epsilon} must lie in (0, {}) (the sum rate)",
            rates.sum()
        )));
    }
    let tf = t as f64;
    let ratio = tf / epsilon;
    let lhs = (6.0 * tf * tf).ln();
    let c = (21u32..)
        .take(1 << 20)
        .find(|&c| lhs < (c as f64 / 12.0 - 1.0) * ratio.ln())
        .ok_or_else(|| Error::usage("no admissible constant c"))?;
    let n = ceil_slack(c as f64 * tf * ratio.log2() / epsilon);
    if n > u32::MAX as f64 {
        return Err(Error::usage(format!("block length n = {n} is not representable")));
    }
    let n = n as u32;
    let slack = epsilon / (3.0 * tf);
    let l = ceil_slack(slack * n as f64) as u32;
    let m_exp = l / 4;
    if m_exp > 63 {
        return Err(Error::usage(format!("m = 2^{m_exp} - 1 is not representable")));
    }
    let m = (1u64 << m_exp) - 1;
    if m == 0 {
        return Err(Error::usage("derived m is zero"));
    }
    let k = rates.rates()[1..]
        .iter()
        .map(|r| (((r - slack) * n as f64).floor().max(0.0) as u32).clamp(l, n))
        .collect();
    WomParams::build(t, n, m, l, k, p.clone(), Some(c))
}

/// Ceiling that ignores floating-point noise just above an integer.
fn ceil_slack(x: f64) -> f64 {
    (x - 1e-9).ceil()
}

/// Total message bits per cell, with round 1 counted at log2 C(n, B_1).
pub fn achieved_rate(params: &WomParams) -> f64 {
    let m = params.m as f64;
    let first = m * log2_binomial(params.n as u64, params.budget(1) as u64);
    let later: f64 = (2..=params.t).map(|j| m * params.hash_output_len(j) as f64).sum();
    (first + later) / params.n0() as f64
}

/// Rate actually realized when messages are packed from a bitstream,
/// where round 1 carries floor(log2 C(n, B_1)) bits per block.
pub fn packed_rate(params: &WomParams) -> f64 {
    let bits: u64 = (1..=params.t).map(|j| params.round_bits(j) as u64).sum();
    params.m as f64 * bits as f64 / params.n0() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wv(s: &str) -> WeightVector {
        s.parse().unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(0.0).unwrap(), 0.0);
        assert_eq!(entropy(1.0).unwrap(), 0.0);
        assert_eq!(entropy(0.5).unwrap(), 1.0);
        // -(1/3)log2(1/3) - (2/3)log2(2/3) = log2 3 - 2/3
        let expected = 3f64.log2() - 2.0 / 3.0;
        assert!((entropy(1.0 / 3.0).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.918_295_834_054_489_6).abs() < 1e-15);
        assert!(entropy(-0.1).is_err());
        assert!(entropy(1.5).is_err());
    }

    #[test]
    fn inverse_entropy_examples() {
        assert_eq!(inverse_entropy(1.0).unwrap(), 0.5);
        assert_eq!(inverse_entropy(0.0).unwrap(), 0.0);
        let h = 3f64.log2() - 2.0 / 3.0;
        assert!((inverse_entropy(h).unwrap() - 1.0 / 3.0).abs() < 1e-9);
        assert!(inverse_entropy(1.1).is_err());
    }

    #[test]
    fn inverse_entropy_grid() {
        for i in 0..=1000 {
            let h = i as f64 / 1000.0;
            let p = inverse_entropy(h).unwrap();
            assert!((0.0..=0.5).contains(&p));
            assert!((entropy(p).unwrap() - h).abs() < 1e-9, "h={h}");
        }
    }

    #[test]
    fn optimal_point_sums() {
        for t in 1..=10u32 {
            let (r, p) = optimal_point(t).unwrap();
            assert!((r.sum() - ((t + 1) as f64).log2()).abs() < 1e-9, "t={t}");
            assert!(in_capacity_region(&r, &p).unwrap());
        }
        let (r, p) = optimal_point(2).unwrap();
        assert!((r.rates()[0] - entropy(1.0 / 3.0).unwrap()).abs() < 1e-15);
        assert!((r.rates()[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(p, wv("1/3,1/2"));
        assert_eq!(optimal_point(1).unwrap().0.rates(), &[1.0]);
        assert_eq!(optimal_point(4).unwrap().1, wv("1/5,1/4,1/3,1/2"));
    }

    #[test]
    fn region_rejects_infeasible_pair() {
        // a p-sweep oracle: R_1 = 1 forces p_1 = 1/2, leaving R_2 <= 1/2
        let rates = RatePoint::new(vec![1.0, 0.6]).unwrap();
        for i in 0..=10_000u64 {
            let p = WeightVector::with_final_half(vec![Ratio::new(i, 20_000)]).unwrap();
            assert!(!in_capacity_region(&rates, &p).unwrap());
        }
        let zero = RatePoint::new(vec![0.0; 3]).unwrap();
        assert!(in_capacity_region(&zero, &wv("0,0,1/2")).unwrap());
        assert!(in_capacity_region(&zero, &wv("1/2")).is_err());
    }

    #[test]
    fn weight_vector_validation() {
        assert!("1/3,1/3".parse::<WeightVector>().is_err());
        assert!("2/3,1/2".parse::<WeightVector>().is_err());
        assert!("1/0,1/2".parse::<WeightVector>().is_err());
        assert!("x,1/2".parse::<WeightVector>().is_err());
        assert_eq!(wv("1/4, 1/3 ,1/2").to_string(), "1/4,1/3,1/2");
        assert_eq!(wv("2/6,1/2").to_string(), "1/3,1/2");
    }

    #[test]
    fn budgets_exact() {
        assert_eq!(wv("1/3,1/2").budgets(10), vec![3, 6]);
        assert_eq!(wv("1/4,1/3,1/2").budgets(12), vec![3, 6, 9]);
        assert_eq!(wv("1/2").budgets(7), vec![3]);
        assert_eq!(wv("1/3,1/2").budgets(320), vec![106, 213]);
    }

    #[test]
    fn derive_half_epsilon_two_writes() {
        let (r, p) = optimal_point(2).unwrap();
        let params = derive_parameters(0.5, 2, &r, &p).unwrap();
        assert_eq!(params.c(), Some(40));
        assert_eq!(params.n(), 320);
        // eps n / 3t = 160/6 = 26.67
        assert_eq!(params.l(), 27);
        assert_eq!(params.m(), (1 << 6) - 1);
        assert_eq!(params.k(), &[186]);
        assert!(!params.desk_executable());
        let mn = params.m() as f64 * params.n() as f64;
        assert!(mn / params.n0() as f64 > 1.0 - 0.5 / 6.0);
        assert!(achieved_rate(&params) >= 3f64.log2() - 0.5);
    }

    #[test]
    fn derive_rejects_bad_epsilon() {
        let (r, p) = optimal_point(2).unwrap();
        assert!(derive_parameters(3f64.log2(), 2, &r, &p).is_err());
        assert!(derive_parameters(0.0, 2, &r, &p).is_err());
        let outside = RatePoint::new(vec![1.0, 0.6]).unwrap();
        assert!(derive_parameters(0.5, 2, &outside, &p).is_err());
    }

    #[test]
    fn derived_rate_guarantee_and_side_condition() {
        for t in 2..=4u32 {
            let (r, p) = optimal_point(t).unwrap();
            for eps in [0.3, 0.5, 0.8] {
                let params = derive_parameters(eps, t, &r, &p).unwrap();
                let c = params.c().unwrap() as f64;
                let ratio = t as f64 / eps;
                assert!(c > 20.0 && 6.0 * ((t * t) as f64) < ratio.powf(c / 12.0 - 1.0));
                assert!(6.0 * ((t * t) as f64) >= ratio.powf((c - 1.0) / 12.0 - 1.0) || c == 21.0);
                assert!(params.n() as f64 >= 20.0 * (1.0 / eps).log2() / eps);
                let mn = params.m() as f64 * params.n() as f64;
                assert!(mn / params.n0() as f64 > 1.0 - eps / (3.0 * t as f64));
                assert!(
                    achieved_rate(&params) >= r.sum() - eps,
                    "t={t} eps={eps} rate={}",
                    achieved_rate(&params)
                );
                let b = params.budgets();
                assert!(b.windows(2).all(|w| w[0] <= w[1]) && b[t as usize - 1] <= params.n());
            }
        }
    }

    #[test]
    fn achieved_rate_examples() {
        let params = WomParams::manual(1, 4, 1, 0, vec![], wv("1/2")).unwrap();
        assert_eq!(params.budgets(), &[2]);
        assert_eq!(params.n0(), 5);
        assert!((achieved_rate(&params) - 6f64.log2() / 5.0).abs() < 1e-15);

        let zero = WomParams::manual(3, 6, 2, 2, vec![2, 2], wv("0,0,1/2")).unwrap();
        assert_eq!(achieved_rate(&zero), 0.0);
    }

    #[test]
    fn manual_validation() {
        assert!(WomParams::manual(2, 10, 4, 2, vec![11], wv("1/3,1/2")).is_err());
        assert!(WomParams::manual(2, 10, 4, 8, vec![7], wv("1/3,1/2")).is_err());
        assert!(WomParams::manual(2, 10, 0, 2, vec![7], wv("1/3,1/2")).is_err());
        assert!(WomParams::manual(2, 10, 4, 2, vec![], wv("1/3,1/2")).is_err());
        assert!(WomParams::manual(2, 10, 4, 2, vec![7], wv("1/2")).is_err());
        let p = WomParams::manual(2, 10, 4, 2, vec![7], wv("1/3,1/2")).unwrap();
        assert_eq!(p.n0(), 2 + 20 + 40);
        assert_eq!(p.budgets(), &[3, 6]);
        assert_eq!(p.round_bits(1), 6);
        assert_eq!(p.round_bits(2), 5);
        assert_eq!(p.data_offset(1), 12);
        assert_eq!(p.side_offset(2), 42);
        assert!(p.desk_executable());
    }

    #[test]
    fn weights_for_optimal_rates() {
        for t in 1..=5u32 {
            let (r, _) = optimal_point(t).unwrap();
            let p = weights_for_rates(&r).unwrap();
            assert!(in_capacity_region(&r, &p).unwrap());
        }
        assert!(weights_for_rates(&RatePoint::new(vec![1.0, 0.6]).unwrap()).is_err());
    }

    #[test]
    fn log2_binomial_matches_exact() {
        for n in 0..=60u32 {
            for k in 0..=n {
                let exact = (binomial(n, k) as f64).log2();
                assert!((log2_binomial(n as u64, k as u64) - exact).abs() < 1e-9);
            }
        }
    }
}
