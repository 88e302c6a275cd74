//! Closed-form single-hop capacities and key-generation scheme rates.
//!
//! All rates are in packets per slot (one packet carries one normalized unit
//! of information), and the source randomness `D` is measured in the same
//! unit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("{name} = {value} is not a probability in [0, 1]")]
    NotAProbability { name: &'static str, value: f64 },
    #[error("randomness rate {0} must be a nonnegative number")]
    NegativeRate(f64),
    #[error("unknown scheme `{0}` (expected KG, ARQ, MDS_EXP or MDS_EXP_ARQ)")]
    UnknownScheme(String),
}

/// Erasure probabilities of one broadcast hop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Erasure probability towards the legitimate receiver.
    pub delta: f64,
    /// Erasure probability towards the eavesdropper.
    pub delta_e: f64,
}

impl ChannelParams {
    pub fn new(delta: f64, delta_e: f64) -> Result<Self, ParamError> {
        let p = Self { delta, delta_e };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        for (name, value) in [("delta", self.delta), ("delta_e", self.delta_e)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ParamError::NotAProbability { name, value });
            }
        }
        Ok(())
    }

    /// Both channels always erase (delta * delta_e = 1): every rate is 0.
    pub fn is_degenerate(&self) -> bool {
        self.delta * self.delta_e >= 1.0
    }

    /// Probability that a single slot reaches the receiver but not Eve,
    /// (1 - delta) * delta_e.
    pub fn secret_slot_rate(&self) -> f64 {
        (1.0 - self.delta) * self.delta_e
    }

    /// Fraction of ARQ-delivered (or MDS-expanded) packets that stay hidden
    /// from Eve: delta_e (1 - delta) / (1 - delta delta_e). 0 on the degenerate corner.
    pub fn secret_fraction(&self) -> f64 {
        ratio(self.secret_slot_rate(), 1.0 - self.delta * self.delta_e)
    }

    /// Net key spent per message: (1 - delta_e) / (1 - delta delta_e).
    pub fn key_cost_per_message(&self) -> f64 {
        ratio(1.0 - self.delta_e, 1.0 - self.delta * self.delta_e)
    }
}

/// `num / den` with the 0/0 corner mapped to 0.
pub(crate) fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// `rate * coef` where an unlimited rate times a zero coefficient is 0.
fn scaled(rate: f64, coef: f64) -> f64 {
    if coef == 0.0 {
        0.0
    } else {
        rate * coef
    }
}

/// Private randomness available at a node, in packets per slot.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Randomness {
    Limited(f64),
    #[default]
    Unlimited,
}

impl Randomness {
    pub fn none() -> Self {
        Randomness::Limited(0.0)
    }

    pub fn is_unlimited(&self) -> bool {
        matches!(self, Randomness::Unlimited)
    }

    /// Rate as a number; unlimited maps to +inf.
    pub fn rate(&self) -> f64 {
        match *self {
            Randomness::Limited(r) => r,
            Randomness::Unlimited => f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        match *self {
            Randomness::Limited(r) if !(r >= 0.0 && r.is_finite()) => Err(ParamError::NegativeRate(r)),
            _ => Ok(()),
        }
    }
}

impl From<f64> for Randomness {
    fn from(r: f64) -> Self {
        if r.is_infinite() {
            Randomness::Unlimited
        } else {
            Randomness::Limited(r)
        }
    }
}

impl fmt::Display for Randomness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Randomness::Limited(r) => write!(f, "{r}"),
            Randomness::Unlimited => f.write_str("unlimited"),
        }
    }
}

impl FromStr for Randomness {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, ParamError> {
        match s.trim() {
            "unlimited" | "inf" => Ok(Randomness::Unlimited),
            other => {
                let r: f64 = other.parse().map_err(|_| ParamError::NegativeRate(f64::NAN))?;
                let out = Randomness::Limited(r);
                out.validate()?;
                Ok(out)
            }
        }
    }
}

impl Serialize for Randomness {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Randomness::Limited(r) => s.serialize_f64(*r),
            Randomness::Unlimited => s.serialize_str("unlimited"),
        }
    }
}

impl<'de> Deserialize<'de> for Randomness {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Num(r) => {
                let out = Randomness::Limited(r);
                out.validate().map(|_| out)
            }
            Raw::Str(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// Secret-key capacity of one hop whose source has randomness rate `d`:
/// min{ D delta_e (1 - delta) / (1 - delta delta_e), (1 - delta) delta_e }.
pub fn csk_single_hop(p: &ChannelParams, d: f64) -> f64 {
    if p.is_degenerate() {
        return 0.0;
    }
    scaled(d, p.secret_fraction()).min(p.secret_slot_rate())
}

/// Secret-message capacity of one hop whose source has randomness rate `d`:
/// min{ (1 - delta) delta_e D / (1 - delta_e),
///      (1 - delta) delta_e (1 - delta delta_e) / (1 - delta delta_e^2) }.
/// With delta_e = 1 the first term is +inf.
pub fn csm_single_hop(p: &ChannelParams, d: f64) -> f64 {
    if p.is_degenerate() {
        return 0.0;
    }
    let (delta, de) = (p.delta, p.delta_e);
    let randomness_term = if de >= 1.0 {
        f64::INFINITY
    } else {
        scaled(d, p.secret_slot_rate() / (1.0 - de))
    };
    let time_term = p.secret_slot_rate() * (1.0 - delta * de) / (1.0 - delta * de * de);
    randomness_term.min(time_term)
}

/// Ways of spending limited source randomness on key generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KeygenScheme {
    /// A fresh random packet in every slot.
    #[serde(rename = "KG")]
    Kg,
    /// Each random packet repeated until acknowledged.
    #[serde(rename = "ARQ")]
    Arq,
    /// Random packets expanded by an MDS matrix, each expanded packet sent once.
    #[serde(rename = "MDS_EXP")]
    MdsExp,
    /// Time-sharing of MDS expansion and ARQ.
    #[serde(rename = "MDS_EXP_ARQ")]
    MdsExpArq,
}

impl KeygenScheme {
    pub const ALL: [KeygenScheme; 4] = [
        KeygenScheme::Kg,
        KeygenScheme::Arq,
        KeygenScheme::MdsExp,
        KeygenScheme::MdsExpArq,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            KeygenScheme::Kg => "KG",
            KeygenScheme::Arq => "ARQ",
            KeygenScheme::MdsExp => "MDS_EXP",
            KeygenScheme::MdsExpArq => "MDS_EXP_ARQ",
        }
    }
}

impl fmt::Display for KeygenScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KeygenScheme {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, ParamError> {
        let norm = s.trim().to_ascii_uppercase().replace(['-', '/'], "_");
        KeygenScheme::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| ParamError::UnknownScheme(s.to_string()))
    }
}

/// Asymptotic per-slot figures of a key-generation scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeRates {
    pub key_rate: f64,
    /// Random packets delivered to the next node per slot.
    pub forwarded_rate: f64,
    /// Source randomness used per slot.
    pub randomness_consumed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub advisory: Option<String>,
}

pub fn scheme_rates(scheme: KeygenScheme, p: &ChannelParams, d: f64) -> SchemeRates {
    let (delta, de) = (p.delta, p.delta_e);
    let one_minus_dde = 1.0 - delta * de;
    let full_key = p.secret_slot_rate();
    let limited_key = scaled(d, p.secret_fraction());
    let mut out = match scheme {
        KeygenScheme::Kg => SchemeRates {
            key_rate: full_key,
            forwarded_rate: 1.0 - delta,
            randomness_consumed: 1.0,
            advisory: (d < 1.0).then(|| format!("insufficient randomness for KG: D = {d} < 1")),
        },
        KeygenScheme::Arq => {
            if d < 1.0 - delta {
                SchemeRates {
                    key_rate: limited_key,
                    forwarded_rate: d,
                    randomness_consumed: d,
                    advisory: None,
                }
            } else {
                SchemeRates {
                    key_rate: (1.0 - delta) * p.secret_fraction(),
                    forwarded_rate: 1.0 - delta,
                    randomness_consumed: 1.0 - delta,
                    advisory: None,
                }
            }
        }
        KeygenScheme::MdsExp => {
            if d < one_minus_dde {
                SchemeRates {
                    key_rate: limited_key,
                    forwarded_rate: ratio(d * (1.0 - delta), one_minus_dde),
                    randomness_consumed: d,
                    advisory: None,
                }
            } else {
                SchemeRates {
                    key_rate: full_key,
                    forwarded_rate: 1.0 - delta,
                    randomness_consumed: one_minus_dde,
                    advisory: None,
                }
            }
        }
        KeygenScheme::MdsExpArq => SchemeRates {
            key_rate: if d < one_minus_dde { limited_key } else { full_key },
            forwarded_rate: d.min(1.0 - delta),
            randomness_consumed: d.min(one_minus_dde),
            advisory: None,
        },
    };
    if p.is_degenerate() {
        out.key_rate = 0.0;
        out.forwarded_rate = 0.0;
    }
    out
}

/// One column of the per-transmission efficiency comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRow {
    pub scheme: KeygenScheme,
    pub keys_per_transmission: f64,
    pub consumed_per_transmission: f64,
}

/// Keys produced and randomness consumed per transmission for KG, ARQ and
/// MDS expansion, assuming the source never runs dry.
pub fn efficiency_table(p: &ChannelParams) -> [EfficiencyRow; 3] {
    let (delta, de) = (p.delta, p.delta_e);
    [
        EfficiencyRow {
            scheme: KeygenScheme::Kg,
            keys_per_transmission: de * (1.0 - delta),
            consumed_per_transmission: 1.0,
        },
        EfficiencyRow {
            scheme: KeygenScheme::Arq,
            keys_per_transmission: ratio(de * (1.0 - delta).powi(2), 1.0 - delta * de),
            // one packet retired per acknowledged slot
            consumed_per_transmission: 1.0 - delta,
        },
        EfficiencyRow {
            scheme: KeygenScheme::MdsExp,
            keys_per_transmission: de * (1.0 - delta),
            consumed_per_transmission: 1.0 - delta * de,
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    ArqOnly,
    MdsOnly,
    Mixed,
}

/// How MDS-exp/ARQ splits the source randomness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulePlan {
    /// Fraction of the randomness routed to MDS expansion, clamped to [0, 1].
    pub alpha: f64,
    /// The time-sharing parameter before clamping; `None` when its
    /// denominator vanishes.
    pub unclamped: Option<f64>,
    pub regime: Regime,
}

/// Time-sharing parameter a solving
/// a D / (1 - delta delta_e) + (1 - a) D / (1 - delta) = 1.
pub fn timeshare_plan(p: &ChannelParams, d: f64) -> SchedulePlan {
    let (delta, de) = (p.delta, p.delta_e);
    let one_minus_dde = 1.0 - delta * de;
    let denominator = d * delta * (1.0 - de);
    if denominator == 0.0 || !denominator.is_finite() {
        let regime = if d < 1.0 - delta {
            Regime::ArqOnly
        } else if d > one_minus_dde {
            Regime::MdsOnly
        } else {
            Regime::Mixed
        };
        let alpha = if regime == Regime::MdsOnly { 1.0 } else { 0.0 };
        return SchedulePlan {
            alpha,
            unclamped: None,
            regime,
        };
    }
    let a = (d * one_minus_dde - (1.0 - delta) * one_minus_dde) / denominator;
    let regime = if a < 0.0 {
        Regime::ArqOnly
    } else if a > 1.0 {
        Regime::MdsOnly
    } else {
        Regime::Mixed
    };
    SchedulePlan {
        alpha: a.clamp(0.0, 1.0),
        unclamped: Some(a),
        regime,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn half() -> ChannelParams {
        ChannelParams::new(0.5, 0.5).unwrap()
    }

    #[test]
    fn csk_examples() {
        let blind = ChannelParams::new(0.3, 0.0).unwrap();
        assert_eq!(csk_single_hop(&blind, 2.0), 0.0);
        assert_eq!(csk_single_hop(&half(), 0.0), 0.0);
        assert!((csk_single_hop(&half(), 0.6) - 0.2).abs() < 1e-12);
        let dead = ChannelParams::new(1.0, 1.0).unwrap();
        assert_eq!(csk_single_hop(&dead, 5.0), 0.0);
        assert_eq!(csk_single_hop(&dead, f64::INFINITY), 0.0);
    }

    #[test]
    fn csm_examples() {
        assert!((csm_single_hop(&half(), f64::INFINITY) - 3.0 / 14.0).abs() < 1e-12);
        assert!((csm_single_hop(&half(), 0.2) - 0.1).abs() < 1e-12);
        // branch threshold D* = (3/14) * (1 - 0.5) / 0.25
        let threshold: f64 = 3.0 / 14.0 * 0.5 / 0.25;
        assert!((threshold - 0.428_571_428_571).abs() < 1e-9);
        let blind_eve = ChannelParams::new(0.3, 1.0).unwrap();
        assert!((csm_single_hop(&blind_eve, 0.0) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn table_rows() {
        let p = half();
        let arq = scheme_rates(KeygenScheme::Arq, &p, 0.3);
        assert!((arq.key_rate - 0.3 * 0.25 / 0.75).abs() < 1e-12);
        assert_eq!(arq.forwarded_rate, 0.3);
        let mds = scheme_rates(KeygenScheme::MdsExp, &p, 0.6);
        assert!((mds.forwarded_rate - 0.4).abs() < 1e-12);
        let both = scheme_rates(KeygenScheme::MdsExpArq, &p, 0.9);
        assert!((both.key_rate - 0.25).abs() < 1e-12);
        assert_eq!(both.forwarded_rate, 0.5);
        let kg = scheme_rates(KeygenScheme::Kg, &p, 0.5);
        assert!(kg.advisory.is_some());
        assert!(scheme_rates(KeygenScheme::Kg, &p, 1.0).advisory.is_none());
    }

    #[test]
    fn efficiency_table_values() {
        let t = efficiency_table(&ChannelParams::new(0.2, 0.6).unwrap());
        assert!((t[0].keys_per_transmission - 0.48).abs() < 1e-12);
        assert!((t[1].keys_per_transmission - 0.6 * 0.64 / 0.88).abs() < 1e-12);
        assert!((t[2].consumed_per_transmission - 0.88).abs() < 1e-12);
    }

    #[test]
    fn timeshare_examples() {
        let p = half();
        let mixed = timeshare_plan(&p, 0.6);
        assert_eq!(mixed.regime, Regime::Mixed);
        assert!((mixed.alpha - 0.5).abs() < 1e-12);
        let arq = timeshare_plan(&p, 0.3);
        assert_eq!(arq.regime, Regime::ArqOnly);
        assert!((arq.unclamped.unwrap() + 2.0).abs() < 1e-12);
        let mds = timeshare_plan(&p, 0.8);
        assert_eq!(mds.regime, Regime::MdsOnly);
        assert!((mds.unclamped.unwrap() - 1.125).abs() < 1e-12);
    }

    #[test]
    fn timeshare_degenerate_denominator() {
        let no_erasure = ChannelParams::new(0.0, 0.5).unwrap();
        assert_eq!(timeshare_plan(&no_erasure, 0.5).regime, Regime::ArqOnly);
        assert_eq!(timeshare_plan(&no_erasure, 1.5).regime, Regime::MdsOnly);
        let blind = ChannelParams::new(0.4, 1.0).unwrap();
        assert_eq!(timeshare_plan(&blind, 0.5).regime, Regime::ArqOnly);
        assert_eq!(timeshare_plan(&half(), 0.0).regime, Regime::ArqOnly);
    }

    #[test]
    fn randomness_serde() {
        let v: Vec<Randomness> = serde_json::from_str(r#"[0.5, "unlimited"]"#).unwrap();
        assert_eq!(v, vec![Randomness::Limited(0.5), Randomness::Unlimited]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"[0.5,"unlimited"]"#);
        assert!(serde_json::from_str::<Randomness>("-1.0").is_err());
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("mds-exp/arq".parse::<KeygenScheme>().unwrap(), KeygenScheme::MdsExpArq);
        assert!("foo".parse::<KeygenScheme>().is_err());
    }

    fn grid() -> impl Iterator<Item = (ChannelParams, f64)> {
        (1..10).flat_map(|i| {
            (1..10).flat_map(move |j| {
                (0..=15).map(move |k| {
                    (
                        ChannelParams::new(i as f64 / 10.0, j as f64 / 10.0).unwrap(),
                        k as f64 / 10.0,
                    )
                })
            })
        })
    }

    #[test]
    fn time_shared_scheme_attains_csk_and_dominates_mds_exp() {
        for (p, d) in grid() {
            let both = scheme_rates(KeygenScheme::MdsExpArq, &p, d);
            let mds = scheme_rates(KeygenScheme::MdsExp, &p, d);
            assert!((both.key_rate - csk_single_hop(&p, d)).abs() < 1e-12);
            assert!((both.forwarded_rate - d.min(1.0 - p.delta)).abs() < 1e-15);
            assert!(both.forwarded_rate + 1e-15 >= mds.forwarded_rate);
            for s in KeygenScheme::ALL {
                let r = scheme_rates(s, &p, d);
                assert!(r.forwarded_rate <= 1.0 - p.delta + 1e-15);
                assert!((0.0..=1.0).contains(&r.key_rate));
            }
        }
    }

    #[test]
    fn csm_monotone_on_grid() {
        for (p, d) in grid() {
            let base = csm_single_hop(&p, d);
            assert!(csm_single_hop(&p, d + 0.1) >= base - 1e-15);
            if p.delta_e < 0.85 {
                let more_eve_erasure = ChannelParams::new(p.delta, p.delta_e + 0.1).unwrap();
                assert!(csm_single_hop(&more_eve_erasure, d) >= base - 1e-15);
            }
            if p.delta < 0.85 {
                let worse = ChannelParams::new(p.delta + 0.1, p.delta_e).unwrap();
                assert!(csm_single_hop(&worse, d) <= base + 1e-15);
            }
        }
    }

    proptest! {
        #[test]
        fn regimes_follow_thresholds(delta in 0.01f64..0.99, de in 0.01f64..0.99, d in 0.01f64..2.0) {
            let p = ChannelParams::new(delta, de).unwrap();
            let plan = timeshare_plan(&p, d);
            prop_assume!((d - (1.0 - delta)).abs() > 1e-9 && (d - (1.0 - delta * de)).abs() > 1e-9);
            prop_assert_eq!(plan.regime == Regime::ArqOnly, d < 1.0 - delta);
            prop_assert_eq!(plan.regime == Regime::MdsOnly, d > 1.0 - delta * de);
            if plan.regime == Regime::Mixed {
                let a = plan.alpha;
                let budget = a * d / (1.0 - delta * de) + (1.0 - a) * d / (1.0 - delta);
                prop_assert!((budget - 1.0).abs() < 1e-9);
            }
        }
    }
}
