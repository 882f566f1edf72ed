//! Entity classes and IOB2 token labels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityClass {
    Per,
    Org,
    Loc,
    Misc,
}

impl EntityClass {
    pub const ALL: [EntityClass; 4] = [
        EntityClass::Per,
        EntityClass::Org,
        EntityClass::Loc,
        EntityClass::Misc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityClass::Per => "PER",
            EntityClass::Org => "ORG",
            EntityClass::Loc => "LOC",
            EntityClass::Misc => "MISC",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for EntityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "PER" => Ok(EntityClass::Per),
            "ORG" => Ok(EntityClass::Org),
            "LOC" => Ok(EntityClass::Loc),
            "MISC" => Ok(EntityClass::Misc),
            other => Err(Error::Invalid(format!("unknown entity class {other:?}"))),
        }
    }
}

impl Serialize for EntityClass {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for EntityClass {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One token label in the IOB2 scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NerLabel {
    O,
    B(EntityClass),
    I(EntityClass),
}

impl NerLabel {
    pub const COUNT: usize = 9;

    /// All labels in their fixed order: O, B-PER, I-PER, B-ORG, ..., I-MISC.
    /// The order doubles as the tie-breaking order for the tagger.
    pub const ALL: [NerLabel; 9] = [
        NerLabel::O,
        NerLabel::B(EntityClass::Per),
        NerLabel::I(EntityClass::Per),
        NerLabel::B(EntityClass::Org),
        NerLabel::I(EntityClass::Org),
        NerLabel::B(EntityClass::Loc),
        NerLabel::I(EntityClass::Loc),
        NerLabel::B(EntityClass::Misc),
        NerLabel::I(EntityClass::Misc),
    ];

    pub fn index(self) -> usize {
        match self {
            NerLabel::O => 0,
            NerLabel::B(c) => 1 + 2 * c.index(),
            NerLabel::I(c) => 2 + 2 * c.index(),
        }
    }

    pub fn from_index(index: usize) -> NerLabel {
        NerLabel::ALL[index]
    }

    pub fn class(self) -> Option<EntityClass> {
        match self {
            NerLabel::O => None,
            NerLabel::B(c) | NerLabel::I(c) => Some(c),
        }
    }

    pub fn is_outside(self) -> bool {
        self == NerLabel::O
    }
}

impl fmt::Display for NerLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NerLabel::O => f.write_str("O"),
            NerLabel::B(c) => write!(f, "B-{c}"),
            NerLabel::I(c) => write!(f, "I-{c}"),
        }
    }
}

impl FromStr for NerLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(NerLabel::O);
        }
        let invalid = || Error::Invalid(format!("malformed tag {s:?}"));
        let (prefix, class) = s.split_once('-').ok_or_else(invalid)?;
        let class: EntityClass = class.parse().map_err(|_| invalid())?;
        match prefix {
            "B" => Ok(NerLabel::B(class)),
            "I" => Ok(NerLabel::I(class)),
            _ => Err(invalid()),
        }
    }
}

impl Serialize for NerLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NerLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Rewrites orphan `I-C` labels (not preceded by `B-C`/`I-C`) as `B-C`.
pub fn repair_bio(labels: &mut [NerLabel]) {
    let mut prev = NerLabel::O;
    for label in labels.iter_mut() {
        if let NerLabel::I(c) = *label {
            if prev.class() != Some(c) {
                *label = NerLabel::B(c);
            }
        }
        prev = *label;
    }
}

/// True when every `I-C` continues a `B-C` or `I-C` of the same class.
pub fn is_well_formed(labels: &[NerLabel]) -> bool {
    let mut prev = NerLabel::O;
    for &label in labels {
        if let NerLabel::I(c) = label {
            if prev.class() != Some(c) {
                return false;
            }
        }
        prev = label;
    }
    true
}
