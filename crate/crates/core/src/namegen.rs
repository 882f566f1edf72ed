//! Compositional name generation.
//!
//! A mention is built by drawing a [`NameForm`] (e.g. first name + last name)
//! with probability proportional to its weight, then filling each element with
//! a uniformly drawn part of that category.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::rng::SeededSampler;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamePart {
    First,
    Last,
    Prefix,
    Suffix,
}

impl NamePart {
    pub const ALL: [NamePart; 4] = [
        NamePart::First,
        NamePart::Last,
        NamePart::Prefix,
        NamePart::Suffix,
    ];

    fn key(self) -> &'static str {
        match self {
            NamePart::First => "first_names",
            NamePart::Last => "last_names",
            NamePart::Prefix => "prefixes",
            NamePart::Suffix => "suffixes",
        }
    }
}

impl fmt::Display for NamePart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NamePart::First => "first",
            NamePart::Last => "last",
            NamePart::Prefix => "prefix",
            NamePart::Suffix => "suffix",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameInventory {
    pub first_names: Vec<String>,
    pub last_names: Vec<String>,
    pub prefixes: Vec<String>,
    pub suffixes: Vec<String>,
}

impl NameInventory {
    /// Builds an inventory, normalizing inner whitespace and dropping duplicates
    /// (first occurrence wins).
    pub fn new(
        first_names: Vec<String>,
        last_names: Vec<String>,
        prefixes: Vec<String>,
        suffixes: Vec<String>,
    ) -> Result<NameInventory> {
        Ok(NameInventory {
            first_names: clean_parts(NamePart::First, first_names)?,
            last_names: clean_parts(NamePart::Last, last_names)?,
            prefixes: clean_parts(NamePart::Prefix, prefixes)?,
            suffixes: clean_parts(NamePart::Suffix, suffixes)?,
        })
    }

    pub fn parts(&self, part: NamePart) -> &[String] {
        match part {
            NamePart::First => &self.first_names,
            NamePart::Last => &self.last_names,
            NamePart::Prefix => &self.prefixes,
            NamePart::Suffix => &self.suffixes,
        }
    }

    pub fn stats(&self) -> InventoryStats {
        InventoryStats {
            first_names: self.first_names.len(),
            last_names: self.last_names.len(),
            prefixes: self.prefixes.len(),
            suffixes: self.suffixes.len(),
        }
    }
}

fn clean_parts(part: NamePart, raw: Vec<String>) -> Result<Vec<String>> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(raw.len());
    for entry in raw {
        let normalized = entry.split_whitespace().collect::<Vec<_>>().join(" ");
        if normalized.is_empty() {
            return Err(Error::Inventory(format!("empty entry in {}", part.key())));
        }
        if seen.insert(normalized.clone()) {
            out.push(normalized);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InventoryStats {
    pub first_names: usize,
    pub last_names: usize,
    pub prefixes: usize,
    pub suffixes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NameForm {
    pub elements: Vec<NamePart>,
    pub weight: f64,
}

impl NameForm {
    pub fn new(elements: Vec<NamePart>, weight: f64) -> NameForm {
        NameForm { elements, weight }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormDistribution {
    pub forms: Vec<NameForm>,
}

impl FormDistribution {
    pub fn new(forms: Vec<NameForm>) -> Result<FormDistribution> {
        if forms.is_empty() {
            return Err(Error::Inventory("form distribution has no forms".into()));
        }
        for form in &forms {
            if form.elements.is_empty() {
                return Err(Error::Inventory("name form without elements".into()));
            }
            if !form.weight.is_finite() || form.weight < 0.0 {
                return Err(Error::Inventory(format!(
                    "form weight must be a finite non-negative number, got {}",
                    form.weight
                )));
            }
        }
        Ok(FormDistribution { forms })
    }

    /// Stand-in frequencies: single first names and first+last names dominate
    /// character references in narrative text.
    pub fn default_forms() -> FormDistribution {
        use NamePart::*;
        FormDistribution {
            forms: vec![
                NameForm::new(vec![First], 0.35),
                NameForm::new(vec![First, Last], 0.40),
                NameForm::new(vec![Last], 0.10),
                NameForm::new(vec![First, Last, Suffix], 0.07),
                NameForm::new(vec![Prefix, First], 0.05),
                NameForm::new(vec![Prefix, First, Last], 0.03),
            ],
        }
    }

    /// Checks that every positively weighted form can be filled from `inventory`.
    pub fn check_against(&self, inventory: &NameInventory) -> Result<()> {
        if !self.forms.iter().any(|f| f.weight > 0.0) {
            return Err(Error::Sampling("all form weights are zero".into()));
        }
        for form in self.forms.iter().filter(|f| f.weight > 0.0) {
            if let Some(part) = form
                .elements
                .iter()
                .find(|p| inventory.parts(**p).is_empty())
            {
                return Err(Error::Sampling(format!(
                    "form references empty category {part}"
                )));
            }
        }
        Ok(())
    }
}

/// Reads an inventory file (JSON object of part lists plus optional `forms`).
///
/// Without a `forms` section the default distribution is used, restricted to
/// forms whose categories are all non-empty in this inventory.
pub fn load_inventory(input: &str) -> Result<(NameInventory, FormDistribution)> {
    let value: Value = serde_json::from_str(input)?;
    let Value::Object(map) = value else {
        return Err(Error::Inventory("inventory must be a JSON object".into()));
    };
    let mut lists: [Vec<String>; 4] = Default::default();
    let mut forms = None;
    for (key, value) in map {
        if key == "forms" {
            let parsed: Vec<NameForm> = serde_json::from_value(value)
                .map_err(|e| Error::Inventory(format!("forms: {e}")))?;
            forms = Some(FormDistribution::new(parsed)?);
            continue;
        }
        let Some(part) = NamePart::ALL.iter().find(|p| p.key() == key) else {
            return Err(Error::Inventory(format!("unknown part category {key:?}")));
        };
        lists[*part as usize] = serde_json::from_value(value)
            .map_err(|e| Error::Inventory(format!("{key}: {e}")))?;
    }
    let [first, last, prefixes, suffixes] = lists;
    let inventory = NameInventory::new(first, last, prefixes, suffixes)?;
    if inventory.first_names.is_empty() {
        return Err(Error::Inventory("first_names must not be empty".into()));
    }
    let forms = match forms {
        Some(forms) => forms,
        None => {
            let mut default = FormDistribution::default_forms();
            default.forms.retain(|f| {
                f.elements
                    .iter()
                    .all(|p| !inventory.parts(*p).is_empty())
            });
            default
        }
    };
    Ok((inventory, forms))
}

/// Writes an inventory (with its forms) in the format read by [`load_inventory`].
pub fn inventory_to_json(inventory: &NameInventory, forms: &FormDistribution) -> Result<String> {
    #[derive(Serialize)]
    struct File<'a> {
        first_names: &'a [String],
        last_names: &'a [String],
        prefixes: &'a [String],
        suffixes: &'a [String],
        forms: &'a [NameForm],
    }
    Ok(serde_json::to_string_pretty(&File {
        first_names: &inventory.first_names,
        last_names: &inventory.last_names,
        prefixes: &inventory.prefixes,
        suffixes: &inventory.suffixes,
        forms: &forms.forms,
    })?)
}

pub fn sample_form<'a>(
    dist: &'a FormDistribution,
    sampler: &mut SeededSampler,
) -> Result<&'a NameForm> {
    let weights: Vec<f64> = dist.forms.iter().map(|f| f.weight).collect();
    sampler
        .weighted(&weights)
        .map(|i| &dist.forms[i])
        .ok_or_else(|| Error::Sampling("all form weights are zero".into()))
}

/// Draws one mention and returns its tokens.
pub fn sample_mention(
    inventory: &NameInventory,
    dist: &FormDistribution,
    sampler: &mut SeededSampler,
) -> Result<Vec<String>> {
    let form = sample_form(dist, sampler)?;
    let mut tokens = Vec::new();
    for &element in &form.elements {
        let parts = inventory.parts(element);
        if parts.is_empty() {
            return Err(Error::Sampling(format!(
                "form references empty category {element}"
            )));
        }
        let part = &parts[sampler.below(parts.len())];
        tokens.extend(part.split(' ').map(str::to_string));
    }
    Ok(tokens)
}
