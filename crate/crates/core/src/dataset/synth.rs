//! Seeded synthetic corpora with the table schema, a chosen class mix and a
//! tunable planted feature/label association.
//!
//! Labels come first: exact class counts are allocated by largest remainder and
//! shuffled. With probability `signal_strength` a record's (category,
//! authorisation_encryption, protocols) triple is then drawn from a
//! label-conditioned table, otherwise uniformly. The table encodes the class
//! ordinal in two bits spread over the three features with a shared mask bit,
//! so every one of the three features is needed to decode the label. All other
//! features are drawn independently of the label.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, LogNormal};

use super::{AuthEncryption, Category, DataStorage, DeviceRecord, YesNo};
use crate::apportion::largest_remainder;
use crate::error::{Error, Result};
use crate::nvd::RiskClass;
use crate::rng::{seeded, Rng};

/// Seed of the corpus shipped in `data/synthetic_corpus.csv`.
pub const BUNDLED_SEED: u64 = 2021;
/// Signal strength of the shipped corpus.
pub const BUNDLED_SIGNAL: f64 = 0.45;

const PROTOCOLS: [&str; 12] = [
    "WiFi", "Bluetooth", "Zigbee", "Z-Wave", "Ethernet", "LTE", "NFC", "LoRaWAN", "Thread",
    "Matter", "Sigfox", "RFID",
];

const PRODUCTS: [&str; 24] = [
    "camera",
    "doorbell",
    "thermostat",
    "smart_plug",
    "smart_bulb",
    "speaker",
    "hub",
    "door_lock",
    "router",
    "baby_monitor",
    "smoke_detector",
    "fitness_tracker",
    "smartwatch",
    "insulin_pump",
    "glucose_monitor",
    "infusion_pump",
    "voip_phone",
    "nas",
    "printer",
    "smart_tv",
    "toy",
    "gps_tracker",
    "garage_opener",
    "sensor",
];

/// Mask bit `v` is 1 with this probability in planted triples. Keeping it away
/// from 1/2 leaves each feature marginally informative.
const MASK_P: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct Cardinalities {
    pub brand: usize,
    pub product_type: usize,
    pub category: usize,
    pub protocols: usize,
    pub communication_capability: usize,
    pub authorisation_encryption: usize,
}

impl Default for Cardinalities {
    fn default() -> Self {
        Self {
            brand: 129,
            product_type: 71,
            category: 5,
            protocols: 8,
            communication_capability: 31,
            authorisation_encryption: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisSpec {
    pub seed: u64,
    pub total: usize,
    /// Indexed by class ordinal.
    pub class_fractions: [f64; RiskClass::COUNT],
    pub cardinalities: Cardinalities,
    pub signal_strength: f64,
}

impl SynthesisSpec {
    /// 1153 rows with class counts 176/138/183/656.
    pub fn class_prior_distribution(seed: u64, signal_strength: f64) -> Self {
        let counts = [176.0, 138.0, 183.0, 656.0];
        Self {
            seed,
            total: 1153,
            class_fractions: counts.map(|c| c / 1153.0),
            cardinalities: Cardinalities::default(),
            signal_strength,
        }
    }

    pub fn bundled() -> Self {
        Self::class_prior_distribution(BUNDLED_SEED, BUNDLED_SIGNAL)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let quotas: Vec<f64> = self
            .class_fractions
            .iter()
            .map(|f| f * self.total as f64)
            .collect();
        largest_remainder(&quotas, self.total)
    }

    fn check(&self) -> Result<()> {
        let sum: f64 = self.class_fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.class_fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::config(format!(
                "class fractions must be in [0,1] and sum to 1 (sum = {sum})"
            )));
        }
        if !(0.0..=1.0).contains(&self.signal_strength) {
            return Err(Error::config("signal_strength must lie in [0, 1]"));
        }
        let c = &self.cardinalities;
        let limits = [
            ("brand", c.brand, usize::MAX),
            ("product_type", c.product_type, usize::MAX),
            ("category", c.category, Category::ALL.len()),
            ("protocols", c.protocols, PROTOCOLS.len()),
            ("communication_capability", c.communication_capability, comm_labels().len()),
            ("authorisation_encryption", c.authorisation_encryption, AuthEncryption::ALL.len()),
        ];
        for (name, v, max) in limits {
            if v < 1 || v > max {
                return Err(Error::config(format!("cardinality of {name} must be in 1..={max}, got {v}")));
            }
        }
        if self.signal_strength > 0.0
            && (c.category < 2 || c.protocols < 2 || c.authorisation_encryption < 2)
        {
            return Err(Error::config(
                "a planted signal needs at least two values of category, protocols and authorisation_encryption",
            ));
        }
        Ok(())
    }
}

/// Single protocols then protocol pairs.
fn comm_labels() -> Vec<String> {
    let mut out: Vec<String> = PROTOCOLS.iter().map(|s| s.to_string()).collect();
    for i in 0..PROTOCOLS.len() {
        for j in i + 1..PROTOCOLS.len() {
            out.push(format!("{}+{}", PROTOCOLS[i], PROTOCOLS[j]));
        }
    }
    out
}

fn product_label(i: usize) -> String {
    let base = PRODUCTS[i % PRODUCTS.len()];
    match i / PRODUCTS.len() {
        0 => base.to_string(),
        gen => format!("{base}_mk{}", gen + 1),
    }
}

fn two_distinct(rng: &mut Rng, n: usize) -> [usize; 2] {
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    [a, b]
}

pub fn synthesize_corpus(spec: &SynthesisSpec) -> Result<Vec<DeviceRecord>> {
    spec.check()?;
    let mut rng = seeded(spec.seed);
    let card = &spec.cardinalities;

    let mut labels: Vec<RiskClass> = spec
        .class_counts()
        .into_iter()
        .enumerate()
        .flat_map(|(c, n)| std::iter::repeat_n(RiskClass::ALL[c], n))
        .collect();
    labels.shuffle(&mut rng);

    let (cat_pair, auth_pair, proto_pair) = if spec.signal_strength > 0.0 {
        (
            two_distinct(&mut rng, card.category),
            two_distinct(&mut rng, card.authorisation_encryption),
            two_distinct(&mut rng, card.protocols),
        )
    } else {
        ([0, 0], [0, 0], [0, 0])
    };

    let comm = comm_labels();
    let price = LogNormal::new(80f64.ln(), 1.0).expect("valid lognormal");
    let mut out = Vec::with_capacity(spec.total);
    for label in labels {
        let (cat, auth, proto) = if rng.random_bool(spec.signal_strength) {
            let c = label.ordinal();
            let v = usize::from(rng.random_bool(MASK_P));
            (cat_pair[v], auth_pair[(c & 1) ^ v], proto_pair[(c >> 1) ^ v])
        } else {
            (
                rng.random_range(0..card.category),
                rng.random_range(0..card.authorisation_encryption),
                rng.random_range(0..card.protocols),
            )
        };
        let brand = rng.random_range(0..card.brand);
        let product = rng.random_range(0..card.product_type);
        let comm_idx = rng.random_range(0..card.communication_capability);
        let storage = DataStorage::ALL[rng.random_range(0..2)];
        let personal = YesNo::ALL[rng.random_range(0..2)];
        let location = YesNo::ALL[rng.random_range(0..2)];
        let cents = (price.sample(&mut rng) * 100.0).round().max(100.0);
        out.push(DeviceRecord {
            brand: format!("brand_{:03}", brand + 1),
            product_type: product_label(product),
            category: Category::ALL[cat].name().to_string(),
            price_usd: cents / 100.0,
            protocols: PROTOCOLS[proto].to_string(),
            data_storage: storage.name().to_string(),
            personal_information: personal.name().to_string(),
            location_track: location.name().to_string(),
            communication_capability: comm[comm_idx].clone(),
            authorisation_encryption: AuthEncryption::ALL[auth].name().to_string(),
            risk_score: label,
            synthetic: true,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{validate, write_corpus};
    use std::collections::{HashMap, HashSet};

    #[test]
    fn prior_totals_match_class_counts() {
        // 1153 * (176/1153) etc. are whole numbers up to rounding, so the
        // apportionment must return them unchanged.
        let spec = SynthesisSpec::class_prior_distribution(1, 0.5);
        assert_eq!(spec.class_counts(), vec![176, 138, 183, 656]);
        let recs = synthesize_corpus(&spec).unwrap();
        let mut counts = [0; 4];
        for r in &recs {
            counts[r.risk_score.ordinal()] += 1;
        }
        assert_eq!(counts, [176, 138, 183, 656]);
        assert!(recs.iter().all(|r| validate(r).is_empty() && r.synthetic));
    }

    #[test]
    fn four_equal_fractions_one_each() {
        let spec = SynthesisSpec {
            seed: 3,
            total: 4,
            class_fractions: [0.25; 4],
            cardinalities: Cardinalities::default(),
            signal_strength: 0.0,
        };
        let mut labels: Vec<_> = synthesize_corpus(&spec).unwrap().iter().map(|r| r.risk_score).collect();
        labels.sort();
        assert_eq!(labels, RiskClass::ALL.to_vec());
    }

    #[test]
    fn same_seed_byte_identical() {
        let spec = SynthesisSpec::class_prior_distribution(99, 0.3);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_corpus(&mut a, &synthesize_corpus(&spec).unwrap()).unwrap();
        write_corpus(&mut b, &synthesize_corpus(&spec).unwrap()).unwrap();
        assert_eq!(a, b);
        let mut other = spec.clone();
        other.seed = 100;
        let mut c = Vec::new();
        write_corpus(&mut c, &synthesize_corpus(&other).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn bad_fractions_rejected() {
        let mut spec = SynthesisSpec::class_prior_distribution(1, 0.0);
        spec.class_fractions = [0.5, 0.5, 0.5, 0.0];
        assert!(matches!(synthesize_corpus(&spec), Err(Error::Config(_))));
    }

    #[test]
    fn distinct_values_bounded_by_cardinalities() {
        let mut spec = SynthesisSpec::class_prior_distribution(5, 0.2);
        spec.total = 3000;
        spec.cardinalities.brand = 7;
        let recs = synthesize_corpus(&spec).unwrap();
        let distinct = |f: fn(&DeviceRecord) -> &str| recs.iter().map(f).collect::<HashSet<_>>().len();
        let c = &spec.cardinalities;
        assert!(distinct(|r| &r.brand) <= c.brand);
        assert!(distinct(|r| &r.product_type) <= c.product_type);
        assert!(distinct(|r| &r.category) <= c.category);
        assert!(distinct(|r| &r.protocols) <= c.protocols);
        assert!(distinct(|r| &r.communication_capability) <= c.communication_capability);
        assert!(distinct(|r| &r.authorisation_encryption) <= c.authorisation_encryption);
    }

    #[test]
    fn full_signal_is_a_function_of_the_triple() {
        let mut spec = SynthesisSpec::class_prior_distribution(11, 1.0);
        spec.total = 5000;
        let recs = synthesize_corpus(&spec).unwrap();
        let mut seen: HashMap<(&str, &str, &str), RiskClass> = HashMap::new();
        for r in &recs {
            let key = (r.category.as_str(), r.authorisation_encryption.as_str(), r.protocols.as_str());
            let prev = *seen.entry(key).or_insert(r.risk_score);
            assert_eq!(prev, r.risk_score, "triple {key:?} maps to two labels");
        }
    }

    /// Pearson chi-square statistic of a contingency table.
    fn chi_square(table: &HashMap<(String, RiskClass), usize>, n: usize) -> (f64, usize) {
        let mut rows: HashMap<&str, usize> = HashMap::new();
        let mut cols = [0usize; 4];
        for ((v, c), k) in table {
            *rows.entry(v.as_str()).or_default() += k;
            cols[c.ordinal()] += k;
        }
        let mut stat = 0.0;
        for (v, rn) in &rows {
            for c in RiskClass::ALL {
                let expected = *rn as f64 * cols[c.ordinal()] as f64 / n as f64;
                let observed = *table.get(&(v.to_string(), c)).unwrap_or(&0) as f64;
                stat += (observed - expected).powi(2) / expected;
            }
        }
        (stat, (rows.len() - 1) * 3)
    }

    #[test]
    fn zero_signal_labels_independent() {
        let mut spec = SynthesisSpec::class_prior_distribution(17, 0.0);
        spec.total = 20_000;
        let recs = synthesize_corpus(&spec).unwrap();
        // Upper 0.001 quantiles of chi-square with 12, 21 and 9 degrees of freedom.
        let critical: HashMap<usize, f64> = [(12, 32.909), (21, 46.797), (9, 27.877), (3, 16.266)].into();
        let features: [fn(&DeviceRecord) -> &str; 4] = [
            |r| &r.category,
            |r| &r.protocols,
            |r| &r.authorisation_encryption,
            |r| &r.data_storage,
        ];
        for f in features {
            let mut table = HashMap::new();
            for r in &recs {
                *table.entry((f(r).to_string(), r.risk_score)).or_insert(0) += 1;
            }
            let (stat, df) = chi_square(&table, recs.len());
            assert!(stat < critical[&df], "chi2 {stat} with df {df}");
        }
    }
}
