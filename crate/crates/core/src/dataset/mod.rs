//! The device dataset: record schema, validation, CSV persistence, class
//! summaries and seeded synthetic corpora.

mod io;
mod summary;
mod synth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::nvd::RiskClass;

pub use io::{
    load_corpus, load_devices, read_corpus, read_devices, save_corpus, save_devices, write_corpus,
    write_devices, CORPUS_HEADER, DEVICE_HEADER,
};
pub use summary::{class_distribution, label_distribution, CorpusSummary};
pub use synth::{synthesize_corpus, Cardinalities, SynthesisSpec, BUNDLED_SEED, BUNDLED_SIGNAL};

macro_rules! closed_set {
    ($(#[$m:meta])* $name:ident { $($variant:ident),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn name(self) -> &'static str {
                match self { $($name::$variant => stringify!($variant)),+ }
            }

            pub fn names() -> String {
                Self::ALL.iter().map(|v| v.name()).collect::<Vec<_>>().join(", ")
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self, Error> {
                Self::ALL
                    .iter()
                    .copied()
                    .find(|v| v.name() == s)
                    .ok_or_else(|| Error::format(format!(
                        "{s:?} is not one of {{{}}}", Self::names()
                    )))
            }
        }
    };
}

closed_set!(
    /// Device category.
    Category { SmartHome, Medical, Wearable, Telecomm, Other }
);
closed_set!(AuthEncryption { Symmetric, Asymmetric, None, Both });
closed_set!(DataStorage { Local, Remote });
closed_set!(YesNo { Yes, No });

/// Input features in table order. `risk_score` is the label and not listed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Feature {
    Brand,
    ProductType,
    Category,
    PriceUsd,
    Protocols,
    DataStorage,
    PersonalInformation,
    LocationTrack,
    CommunicationCapability,
    AuthorisationEncryption,
}

impl Feature {
    pub const ALL: [Feature; 10] = [
        Feature::Brand,
        Feature::ProductType,
        Feature::Category,
        Feature::PriceUsd,
        Feature::Protocols,
        Feature::DataStorage,
        Feature::PersonalInformation,
        Feature::LocationTrack,
        Feature::CommunicationCapability,
        Feature::AuthorisationEncryption,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Brand => "brand",
            Feature::ProductType => "product_type",
            Feature::Category => "category",
            Feature::PriceUsd => "price_usd",
            Feature::Protocols => "protocols",
            Feature::DataStorage => "data_storage",
            Feature::PersonalInformation => "personal_information",
            Feature::LocationTrack => "location_track",
            Feature::CommunicationCapability => "communication_capability",
            Feature::AuthorisationEncryption => "authorisation_encryption",
        }
    }

    pub fn is_categorical(self) -> bool {
        self != Feature::PriceUsd
    }

    pub fn categorical() -> impl Iterator<Item = Feature> {
        Self::ALL.into_iter().filter(|f| f.is_categorical())
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::config(format!("unknown feature {s:?}")))
    }
}

/// Descriptive features of one device, without the label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceInput {
    pub brand: String,
    pub product_type: String,
    pub category: String,
    pub price_usd: f64,
    pub protocols: String,
    pub data_storage: String,
    pub personal_information: String,
    pub location_track: String,
    pub communication_capability: String,
    pub authorisation_encryption: String,
    pub synthetic: bool,
}

/// One labelled row of the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceRecord {
    pub brand: String,
    pub product_type: String,
    pub category: String,
    pub price_usd: f64,
    pub protocols: String,
    pub data_storage: String,
    pub personal_information: String,
    pub location_track: String,
    pub communication_capability: String,
    pub authorisation_encryption: String,
    pub risk_score: RiskClass,
    pub synthetic: bool,
}

/// Uniform read access to the descriptive features.
pub trait Features {
    /// Value of a categorical feature. Panics for `PriceUsd`.
    fn categorical(&self, feature: Feature) -> &str;
    fn price_usd(&self) -> f64;
}

macro_rules! impl_features {
    ($t:ty) => {
        impl Features for $t {
            fn categorical(&self, feature: Feature) -> &str {
                match feature {
                    Feature::Brand => &self.brand,
                    Feature::ProductType => &self.product_type,
                    Feature::Category => &self.category,
                    Feature::Protocols => &self.protocols,
                    Feature::DataStorage => &self.data_storage,
                    Feature::PersonalInformation => &self.personal_information,
                    Feature::LocationTrack => &self.location_track,
                    Feature::CommunicationCapability => &self.communication_capability,
                    Feature::AuthorisationEncryption => &self.authorisation_encryption,
                    Feature::PriceUsd => panic!("price_usd is not categorical"),
                }
            }

            fn price_usd(&self) -> f64 {
                self.price_usd
            }
        }
    };
}
impl_features!(DeviceInput);
impl_features!(DeviceRecord);

impl DeviceRecord {
    pub fn input(&self) -> DeviceInput {
        DeviceInput {
            brand: self.brand.clone(),
            product_type: self.product_type.clone(),
            category: self.category.clone(),
            price_usd: self.price_usd,
            protocols: self.protocols.clone(),
            data_storage: self.data_storage.clone(),
            personal_information: self.personal_information.clone(),
            location_track: self.location_track.clone(),
            communication_capability: self.communication_capability.clone(),
            authorisation_encryption: self.authorisation_encryption.clone(),
            synthetic: self.synthetic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Violations found in one data row (1-based, header excluded).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowViolation {
    pub row: usize,
    pub violations: Vec<Violation>,
}

impl fmt::Display for RowViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}: ", self.row)?;
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

fn check_closed<T: FromStr>(field: &'static str, value: &str, names: String, out: &mut Vec<Violation>) {
    if !value.is_empty() && value.parse::<T>().is_err() {
        out.push(Violation {
            field,
            message: format!("{value:?} is not in the closed set {{{names}}}"),
        });
    }
}

/// Field-level checks shared by labelled and unlabelled rows.
pub fn validate_features(record: &impl Features) -> Vec<Violation> {
    let mut out = Vec::new();
    for f in Feature::categorical() {
        if record.categorical(f).trim().is_empty() {
            out.push(Violation {
                field: f.name(),
                message: "empty field".into(),
            });
        }
    }
    check_closed::<Category>("category", record.categorical(Feature::Category), Category::names(), &mut out);
    check_closed::<AuthEncryption>(
        "authorisation_encryption",
        record.categorical(Feature::AuthorisationEncryption),
        AuthEncryption::names(),
        &mut out,
    );
    check_closed::<DataStorage>(
        "data_storage",
        record.categorical(Feature::DataStorage),
        DataStorage::names(),
        &mut out,
    );
    check_closed::<YesNo>(
        "personal_information",
        record.categorical(Feature::PersonalInformation),
        YesNo::names(),
        &mut out,
    );
    check_closed::<YesNo>(
        "location_track",
        record.categorical(Feature::LocationTrack),
        YesNo::names(),
        &mut out,
    );
    let p = record.price_usd();
    if !p.is_finite() {
        out.push(Violation {
            field: "price_usd",
            message: "price is not a finite number".into(),
        });
    } else if p < 0.0 {
        out.push(Violation {
            field: "price_usd",
            message: "negative price".into(),
        });
    }
    out
}

/// Checks a record; an empty list means the record is valid.
pub fn validate(record: &DeviceRecord) -> Vec<Violation> {
    validate_features(record)
}

#[cfg(test)]
pub(crate) fn sample_record() -> DeviceRecord {
    DeviceRecord {
        brand: "acme".into(),
        product_type: "smart_camera".into(),
        category: "SmartHome".into(),
        price_usd: 49.99,
        protocols: "WiFi".into(),
        data_storage: "Remote".into(),
        personal_information: "Yes".into(),
        location_track: "No".into(),
        communication_capability: "WiFi".into(),
        authorisation_encryption: "Symmetric".into(),
        risk_score: RiskClass::High,
        synthetic: false,
    }
}
