//! Semi-measures over finite strings, channels, the information
//! functional between them and conservation-gap measurement.
//!
//! Weights are exact rationals end to end; only the final log-domain
//! reduction is floating point, so mixture identities hold exactly.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::bits::Bits;
use crate::logdomain::pow2;
use crate::oracle::{ExactParts, GapReport, InfoValue, Oracle};

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("weight for \"{0}\" is not positive")]
    NonPositiveWeight(Bits),
    #[error("total mass {0} exceeds 1")]
    TotalExceedsOne(BigRational),
    #[error("channel row \"{0}\" is not a probability (total {1})")]
    RowNotProbability(Bits, BigRational),
    #[error("channel has no row for input \"{0}\"")]
    MissingRow(Bits),
    #[error("cannot parse weight \"{0}\" (expected num/den)")]
    BadWeight(String),
}

/// A finitely supported map from strings to positive rational weights
/// with total mass at most 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemiMeasure {
    weights: BTreeMap<Bits, BigRational>,
}

impl SemiMeasure {
    pub fn new(weights: BTreeMap<Bits, BigRational>) -> Result<Self, MeasureError> {
        let mut total = BigRational::zero();
        for (x, w) in &weights {
            if !w.is_positive() {
                return Err(MeasureError::NonPositiveWeight(x.clone()));
            }
            total += w;
        }
        if total > BigRational::one() {
            return Err(MeasureError::TotalExceedsOne(total));
        }
        Ok(SemiMeasure { weights })
    }

    pub fn empty() -> Self {
        SemiMeasure {
            weights: BTreeMap::new(),
        }
    }

    pub fn point_mass(x: &Bits) -> Self {
        let mut weights = BTreeMap::new();
        weights.insert(x.clone(), BigRational::one());
        SemiMeasure { weights }
    }

    /// Uniform probability over all strings of the given length.
    pub fn uniform_over_length(n: usize) -> Self {
        let w = pow2(-(n as i64));
        let weights = Bits::all_of_length(n)
            .into_iter()
            .map(|x| (x, w.clone()))
            .collect();
        SemiMeasure { weights }
    }

    /// Exact mixture `Σ cᵢ·pᵢ`; fails if the result is not a semi-measure.
    pub fn mixture(parts: &[(BigRational, &SemiMeasure)]) -> Result<Self, MeasureError> {
        let mut weights: BTreeMap<Bits, BigRational> = BTreeMap::new();
        for (c, p) in parts {
            for (x, w) in &p.weights {
                *weights.entry(x.clone()).or_insert_with(BigRational::zero) += c * w;
            }
        }
        weights.retain(|_, w| !w.is_zero());
        SemiMeasure::new(weights)
    }

    pub fn total(&self) -> BigRational {
        self.weights.values().fold(BigRational::zero(), |a, w| a + w)
    }

    pub fn is_probability(&self) -> bool {
        self.total() == BigRational::one()
    }

    pub fn get(&self, x: &Bits) -> BigRational {
        self.weights.get(x).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn support_len(&self) -> usize {
        self.weights.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Bits, &BigRational)> {
        self.weights.iter()
    }

    /// Drops the named support point (the remaining weights stand as-is).
    pub fn without(&self, x: &Bits) -> Self {
        let mut weights = self.weights.clone();
        weights.remove(x);
        SemiMeasure { weights }
    }
}

impl Serialize for SemiMeasure {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<String, String> = self
            .weights
            .iter()
            .map(|(x, w)| (x.to_string(), w.to_string()))
            .collect();
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SemiMeasure {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<String, String>::deserialize(deserializer)?;
        let mut weights = BTreeMap::new();
        for (k, v) in map {
            let x: Bits = k.parse().map_err(D::Error::custom)?;
            let w: BigRational = v
                .parse()
                .map_err(|_| D::Error::custom(MeasureError::BadWeight(v.clone())))?;
            weights.insert(x, w);
        }
        SemiMeasure::new(weights).map_err(D::Error::custom)
    }
}

/// A family of probability measures indexed by input strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, SemiMeasure>", into = "BTreeMap<String, SemiMeasure>")]
pub struct Channel {
    rows: BTreeMap<Bits, SemiMeasure>,
}

impl TryFrom<BTreeMap<String, SemiMeasure>> for Channel {
    type Error = MeasureError;

    fn try_from(raw: BTreeMap<String, SemiMeasure>) -> Result<Self, MeasureError> {
        let mut rows = BTreeMap::new();
        for (k, v) in raw {
            let z: Bits = k.parse().map_err(|_| MeasureError::BadWeight(k))?;
            rows.insert(z, v);
        }
        Channel::new(rows)
    }
}

impl From<Channel> for BTreeMap<String, SemiMeasure> {
    fn from(ch: Channel) -> Self {
        ch.rows
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }
}

impl Channel {
    pub fn new(rows: BTreeMap<Bits, SemiMeasure>) -> Result<Self, MeasureError> {
        for (z, row) in &rows {
            let total = row.total();
            if total != BigRational::one() {
                return Err(MeasureError::RowNotProbability(z.clone(), total));
            }
        }
        Ok(Channel { rows })
    }

    pub fn row(&self, z: &Bits) -> Option<&SemiMeasure> {
        self.rows.get(z)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &Bits> {
        self.rows.keys()
    }

    /// Identity on a given input set.
    pub fn identity_on<'a, I: IntoIterator<Item = &'a Bits>>(inputs: I) -> Self {
        let rows = inputs
            .into_iter()
            .map(|z| (z.clone(), SemiMeasure::point_mass(z)))
            .collect();
        Channel { rows }
    }

    /// The canonical spread: each input maps to the uniform distribution
    /// over strings of its own length.
    pub fn uniform_spread<'a, I: IntoIterator<Item = &'a Bits>>(inputs: I) -> Self {
        let rows = inputs
            .into_iter()
            .map(|z| (z.clone(), SemiMeasure::uniform_over_length(z.len())))
            .collect();
        Channel { rows }
    }

    /// Deterministic bitwise complement.
    pub fn bit_flip<'a, I: IntoIterator<Item = &'a Bits>>(inputs: I) -> Self {
        let rows = inputs
            .into_iter()
            .map(|z| {
                let flipped = Bits::from_bools(z.iter().map(|b| !b));
                (z.clone(), SemiMeasure::point_mass(&flipped))
            })
            .collect();
        Channel { rows }
    }

    /// Row-wise composition `(g∘f)(x|z) = Σ_w g(x|w) f(w|z)`.
    pub fn compose(g: &Channel, f: &Channel) -> Result<Channel, MeasureError> {
        let mut rows = BTreeMap::new();
        for (z, row) in &f.rows {
            rows.insert(z.clone(), apply_channel(g, row)?);
        }
        Ok(Channel { rows })
    }
}

/// `fp(x) = Σ_z f(x|z) p(z)`, exact.
pub fn apply_channel(f: &Channel, p: &SemiMeasure) -> Result<SemiMeasure, MeasureError> {
    let mut weights: BTreeMap<Bits, BigRational> = BTreeMap::new();
    for (z, pw) in p.iter() {
        let row = f.row(z).ok_or_else(|| MeasureError::MissingRow(z.clone()))?;
        for (x, fw) in row.iter() {
            *weights.entry(x.clone()).or_insert_with(BigRational::zero) += pw * fw;
        }
    }
    weights.retain(|_, w| !w.is_zero());
    SemiMeasure::new(weights)
}

/// Exact pieces of `Σ_{x,y} 2^{i(x:y)} p(x) q(y)` over oracle-resolved
/// pairs, with the resolved and total weights for honesty accounting.
pub fn discrete_info_parts(p: &SemiMeasure, q: &SemiMeasure, oracle: &Oracle) -> ExactParts {
    let mut resolved_sum = BigRational::zero();
    let mut resolved_mass = BigRational::zero();
    let mut total_mass = BigRational::zero();
    for (x, wx) in p.iter() {
        for (y, wy) in q.iter() {
            let w = wx * wy;
            total_mass += &w;
            if let Some(i) = oracle.mutual_info_raw(x, y) {
                resolved_sum += &w * pow2(i);
                resolved_mass += &w;
            }
        }
    }
    ExactParts {
        resolved_sum,
        resolved_mass,
        total_mass,
    }
}

/// `ii(p:q) = log2 Σ 2^{i(x:y)} p(x) q(y)`.
pub fn discrete_info(p: &SemiMeasure, q: &SemiMeasure, oracle: &Oracle) -> InfoValue {
    let parts = discrete_info_parts(p, q, oracle);
    let ratio = if parts.total_mass.is_zero() {
        1.0
    } else {
        (&parts.resolved_mass / &parts.total_mass)
            .to_f64()
            .unwrap_or(0.0)
    };
    oracle.info_value(parts.to_log_value(), ratio)
}

/// `ii(p:q) − ii(fp:q)`: the measured conservation gap for one channel.
pub fn conservation_gap(
    f: &Channel,
    p: &SemiMeasure,
    q: &SemiMeasure,
    oracle: &Oracle,
) -> Result<GapReport, MeasureError> {
    let before = discrete_info(p, q, oracle);
    let fp = apply_channel(f, p)?;
    let after = discrete_info(&fp, q, oracle);
    Ok(GapReport::between(before, after))
}

/// Self-information of a measure next to the complexity of its canonical
/// encoding; the bound harness asserts the first stays within a frozen
/// constant of the second.
pub fn computable_self_info_bound(
    p: &SemiMeasure,
    encoding: &Bits,
    oracle: &Oracle,
) -> (InfoValue, Option<u32>) {
    let info = discrete_info(p, p, oracle);
    let k = oracle.complexity(encoding, oracle.ambient_aux());
    (info, k)
}

/// `i(x:x) − K(x)`: zero on an ideal machine, a measured constant here.
pub fn self_info_defect(x: &Bits, oracle: &Oracle) -> Option<i64> {
    let i = oracle.mutual_info_raw(x, x)?;
    let k = oracle.complexity(x, oracle.ambient_aux())? as i64;
    Some(i - k)
}

// ---------------------------------------------------------------------------
// Deterministic random fixtures for the gap suites
// ---------------------------------------------------------------------------

/// Random probability with dyadic weights over a support drawn from
/// strings of length ≤ `max_len`.
pub fn random_probability<R: Rng>(rng: &mut R, max_len: usize, support: usize) -> SemiMeasure {
    let pool = Bits::all_up_to_length(max_len);
    let mut chosen = BTreeMap::new();
    while chosen.len() < support.min(pool.len()) {
        let x = pool[rng.gen_range(0..pool.len())].clone();
        chosen.entry(x).or_insert_with(|| rng.gen_range(1u64..64));
    }
    let total: u64 = chosen.values().sum();
    let weights = chosen
        .into_iter()
        .map(|(x, k)| (x, BigRational::new(k.into(), total.into())))
        .collect();
    SemiMeasure::new(weights).expect("normalized weights")
}

/// Random channel with probability rows over the given domain.
pub fn random_channel<R: Rng>(
    rng: &mut R,
    domain: &[Bits],
    out_len: usize,
    row_support: usize,
) -> Channel {
    let rows = domain
        .iter()
        .map(|z| (z.clone(), random_probability(rng, out_len, row_support)))
        .collect();
    Channel::new(rows).expect("rows are probabilities")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;
    use crate::fixtures;
    use crate::machine::DEFAULT_BUDGET;
    use crate::oracle::LogValue;
    use proptest::prelude::*;
    use rand::{Rng as _, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn oracle_m2() -> Oracle {
        Oracle::new(fixtures::m2(), 18, DEFAULT_BUDGET).unwrap()
    }

    #[test]
    fn point_mass_info_is_mutual_info() {
        let o = oracle_m2();
        for (x, y) in [("", ""), ("0", "1"), ("01", "01"), ("110", "0")] {
            let (x, y) = (bits(x), bits(y));
            let ii = discrete_info(
                &SemiMeasure::point_mass(&x),
                &SemiMeasure::point_mass(&y),
                &o,
            );
            let i = o.mutual_info_raw(&x, &y).unwrap() as f64;
            assert!((ii.finite().unwrap() - i).abs() < 1e-12);
        }
    }

    #[test]
    fn self_point_mass_and_machine_constant() {
        let o = oracle_m2();
        let x = bits("0110");
        let ii = discrete_info(
            &SemiMeasure::point_mass(&x),
            &SemiMeasure::point_mass(&x),
            &o,
        );
        let i_xx = o.mutual_info_raw(&x, &x).unwrap();
        assert_eq!(ii.finite().unwrap(), i_xx as f64);
        // the defect i(x:x) − K(x) is the reportable machine constant
        let defect = self_info_defect(&x, &o).unwrap();
        assert_eq!(
            defect,
            i_xx - o.complexity(&x, &Bits::empty()).unwrap() as i64
        );
    }

    #[test]
    fn uniform_u2_brute_force() {
        let o = oracle_m2();
        let u2 = SemiMeasure::uniform_over_length(2);
        let got = discrete_info(&u2, &u2, &o);
        // independent 16-term double sum
        let mut sum = BigRational::zero();
        for x in Bits::all_of_length(2) {
            for y in Bits::all_of_length(2) {
                let i = o.mutual_info_raw(&x, &y).expect("resolved at this bound");
                sum += pow2(i) * pow2(-4);
            }
        }
        let expect = crate::logdomain::log2_rational(&sum).unwrap();
        assert!((got.finite().unwrap() - expect).abs() < 1e-12);
        assert!(!got.is_partial());
    }

    #[test]
    fn uniform_u2_on_m0_is_honestly_unresolved() {
        // m0 has no programs for pair encodings of 2-bit strings, so every
        // term is excluded and the value is flagged, not faked
        let o = Oracle::new(fixtures::m0(), 20, DEFAULT_BUDGET).unwrap();
        let u2 = SemiMeasure::uniform_over_length(2);
        let got = discrete_info(&u2, &u2, &o);
        assert!(got.value.is_unresolved());
        assert_eq!(got.resolved_mass, 0.0);
    }

    #[test]
    fn empty_support_is_neg_inf() {
        let o = oracle_m2();
        let got = discrete_info(&SemiMeasure::empty(), &SemiMeasure::empty(), &o);
        assert_eq!(got.value, LogValue::NegInf);
    }

    #[test]
    fn apply_channel_examples() {
        let support: Vec<Bits> = vec![bits("0"), bits("1"), bits("01")];
        let p = SemiMeasure::mixture(&[
            (BigRational::new(1.into(), 2.into()), &SemiMeasure::point_mass(&bits("0"))),
            (BigRational::new(1.into(), 2.into()), &SemiMeasure::point_mass(&bits("1"))),
        ])
        .unwrap();

        let id = Channel::identity_on(support.iter());
        assert_eq!(apply_channel(&id, &p).unwrap(), p);

        let spread = Channel::uniform_spread([bits("01")].iter());
        let spread_p = apply_channel(&spread, &SemiMeasure::point_mass(&bits("01"))).unwrap();
        assert_eq!(spread_p, SemiMeasure::uniform_over_length(2));

        let flip = Channel::bit_flip(support.iter());
        let flipped = apply_channel(&flip, &p).unwrap();
        assert_eq!(flipped, p); // {0,1} swap is symmetric here

        let missing = Channel::identity_on([bits("0")].iter());
        assert!(matches!(
            apply_channel(&missing, &p),
            Err(MeasureError::MissingRow(_))
        ));
    }

    #[test]
    fn apply_channel_preserves_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_probability(&mut rng, 3, 5);
        let domain: Vec<Bits> = p.iter().map(|(x, _)| x.clone()).collect();
        let f = random_channel(&mut rng, &domain, 3, 4);
        let fp = apply_channel(&f, &p).unwrap();
        assert_eq!(fp.total(), p.total());
    }

    #[test]
    fn identity_channel_gap_is_exactly_zero() {
        let o = oracle_m2();
        let p = SemiMeasure::uniform_over_length(2);
        let q = SemiMeasure::point_mass(&bits("1"));
        let id = Channel::identity_on(p.iter().map(|(x, _)| x));
        let report = conservation_gap(&id, &p, &q, &o).unwrap();
        assert_eq!(report.gap, Some(0.0));
    }

    #[test]
    fn uniform_spread_decreases_self_info() {
        let o = oracle_m2();
        let x = bits("01");
        let p = SemiMeasure::point_mass(&x);
        let spread = Channel::uniform_spread([x.clone()].iter());
        let fp = apply_channel(&spread, &p).unwrap();
        let before = discrete_info(&p, &p, &o).finite().unwrap();
        let after = discrete_info(&fp, &fp, &o).finite().unwrap();
        assert!(before > after, "spreading must lose self-information");
        assert_eq!(before, o.mutual_info_raw(&x, &x).unwrap() as f64);
    }

    #[test]
    fn channel_composition_matches_sequential_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = random_probability(&mut rng, 2, 4);
        let domain: Vec<Bits> = Bits::all_up_to_length(2);
        let f = random_channel(&mut rng, &domain, 2, 3);
        let g = random_channel(&mut rng, &domain, 2, 3);
        let gf = Channel::compose(&g, &f).unwrap();
        let sequential = apply_channel(&g, &apply_channel(&f, &p).unwrap()).unwrap();
        let composed = apply_channel(&gf, &p).unwrap();
        assert_eq!(sequential, composed);
    }

    #[test]
    fn truncation_never_increases_the_sum() {
        let o = oracle_m2();
        let p = SemiMeasure::uniform_over_length(2);
        let q = SemiMeasure::uniform_over_length(1);
        let full = discrete_info_parts(&p, &q, &o).resolved_sum;
        let truncated = discrete_info_parts(&p.without(&bits("01")), &q, &o).resolved_sum;
        assert!(truncated <= full);
    }

    #[test]
    fn semi_measure_serde_round_trip() {
        let p = SemiMeasure::mixture(&[
            (BigRational::new(1.into(), 3.into()), &SemiMeasure::point_mass(&bits("01"))),
            (BigRational::new(1.into(), 2.into()), &SemiMeasure::uniform_over_length(1)),
        ])
        .unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let again: SemiMeasure = serde_json::from_str(&json).unwrap();
        assert_eq!(p, again);

        let ch = Channel::uniform_spread([bits("0"), bits("10")].iter());
        let json = serde_json::to_string(&ch).unwrap();
        let again: Channel = serde_json::from_str(&json).unwrap();
        assert_eq!(ch, again);
    }

    #[test]
    fn rejects_invalid_measures() {
        let mut w = BTreeMap::new();
        w.insert(bits("0"), BigRational::new(3.into(), 4.into()));
        w.insert(bits("1"), BigRational::new(1.into(), 2.into()));
        assert!(matches!(
            SemiMeasure::new(w),
            Err(MeasureError::TotalExceedsOne(_))
        ));

        let mut rows = BTreeMap::new();
        rows.insert(
            bits("0"),
            SemiMeasure::mixture(&[(
                BigRational::new(1.into(), 2.into()),
                &SemiMeasure::point_mass(&bits("0")),
            )])
            .unwrap(),
        );
        assert!(matches!(
            Channel::new(rows),
            Err(MeasureError::RowNotProbability(_, _))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn mixture_bilinearity_exact(seed in 0u64..500) {
            // 2^{ii(Σ aᵢ pᵢ : q)} = Σ aᵢ 2^{ii(pᵢ : q)} exactly
            let o = oracle_m2();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p1 = random_probability(&mut rng, 2, 3);
            let p2 = random_probability(&mut rng, 2, 4);
            let q = random_probability(&mut rng, 2, 3);
            let a1 = BigRational::new(rng.gen_range(1i64..8).into(), 8.into());
            let a2 = BigRational::one() - &a1;
            let mix = SemiMeasure::mixture(&[(a1.clone(), &p1), (a2.clone(), &p2)]).unwrap();
            let lhs = discrete_info_parts(&mix, &q, &o).resolved_sum;
            let rhs = a1 * discrete_info_parts(&p1, &q, &o).resolved_sum
                + a2 * discrete_info_parts(&p2, &q, &o).resolved_sum;
            prop_assert_eq!(lhs, rhs);
        }
    }
}
