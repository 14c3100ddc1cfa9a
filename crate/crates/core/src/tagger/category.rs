use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// The closed 13-category entity schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityCategory {
    Descriptor,
    MaterialTarget,
    MaterialIntermedium,
    Operation,
    Device,
    Brand,
    PropertyTime,
    Value,
    PropertyPressure,
    MaterialOthers,
    MaterialRecipe,
    PropertyTemperature,
    PropertyRate,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown slot {name:?}; valid slots: {}", EntityCategory::ALL.map(|c| c.as_str()).join(", "))]
pub struct UnknownCategory {
    pub name: String,
}

/// Underscore-style slot names that do not fold onto a canonical name.
const EXTRA_ALIASES: &[(&str, EntityCategory)] = &[("material_temperature", EntityCategory::PropertyTemperature)];

impl EntityCategory {
    pub const COUNT: usize = 13;

    pub const ALL: [EntityCategory; 13] = [
        EntityCategory::Descriptor,
        EntityCategory::MaterialTarget,
        EntityCategory::MaterialIntermedium,
        EntityCategory::Operation,
        EntityCategory::Device,
        EntityCategory::Brand,
        EntityCategory::PropertyTime,
        EntityCategory::Value,
        EntityCategory::PropertyPressure,
        EntityCategory::MaterialOthers,
        EntityCategory::MaterialRecipe,
        EntityCategory::PropertyTemperature,
        EntityCategory::PropertyRate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityCategory::Descriptor => "Descriptor",
            EntityCategory::MaterialTarget => "Material-target",
            EntityCategory::MaterialIntermedium => "Material-intermedium",
            EntityCategory::Operation => "Operation",
            EntityCategory::Device => "Device",
            EntityCategory::Brand => "Brand",
            EntityCategory::PropertyTime => "Property-time",
            EntityCategory::Value => "Value",
            EntityCategory::PropertyPressure => "Property-pressure",
            EntityCategory::MaterialOthers => "Material-others",
            EntityCategory::MaterialRecipe => "Material-recipe",
            EntityCategory::PropertyTemperature => "Property-temperature",
            EntityCategory::PropertyRate => "Property-rate",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Canonical names only, exact spelling.
    pub fn from_canonical(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == name)
    }

    /// Resolves a slot name: case-insensitive, `_` and `-` interchangeable,
    /// plus the underscore-style aliases.
    pub fn resolve(name: &str) -> Result<Self, UnknownCategory> {
        let folded = fold_slot_name(name);
        Self::ALL
            .into_iter()
            .find(|c| fold_slot_name(c.as_str()) == folded)
            .or_else(|| {
                EXTRA_ALIASES
                    .iter()
                    .find(|(alias, _)| fold_slot_name(alias) == folded)
                    .map(|&(_, c)| c)
            })
            .ok_or_else(|| UnknownCategory { name: name.to_string() })
    }

    /// Alternative spellings accepted on input, for display.
    pub fn aliases(self) -> Vec<String> {
        let canonical = self.as_str();
        let mut out = vec![canonical.replace('-', "_")];
        for (alias, c) in EXTRA_ALIASES {
            if *c == self {
                out.push(title_case_alias(alias));
            }
        }
        out.retain(|a| a != canonical);
        out.dedup();
        out
    }

    pub fn is_material(self) -> bool {
        matches!(
            self,
            EntityCategory::MaterialTarget
                | EntityCategory::MaterialIntermedium
                | EntityCategory::MaterialOthers
                | EntityCategory::MaterialRecipe
        )
    }

    /// Whether normalized values keep their case.
    pub fn preserves_case(self) -> bool {
        self.is_material() || self == EntityCategory::Brand
    }
}

fn fold_slot_name(name: &str) -> String {
    name.trim().to_lowercase().replace('_', "-")
}

fn title_case_alias(alias: &str) -> String {
    let mut chars = alias.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

impl fmt::Display for EntityCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityCategory {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::resolve(s)
    }
}

impl Serialize for EntityCategory {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for EntityCategory {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        EntityCategory::resolve(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirteen_distinct_names() {
        let names: std::collections::BTreeSet<_> = EntityCategory::ALL.iter().map(|c| c.as_str()).collect();
        assert_eq!(names.len(), EntityCategory::COUNT);
        for (i, c) in EntityCategory::ALL.iter().enumerate() {
            assert_eq!(c.index(), i);
            assert_eq!(EntityCategory::from_index(i), Some(*c));
        }
    }

    #[test]
    fn underscore_aliases_resolve() {
        assert_eq!(EntityCategory::resolve("Material_recipe").unwrap(), EntityCategory::MaterialRecipe);
        assert_eq!(
            EntityCategory::resolve("Material_temperature").unwrap(),
            EntityCategory::PropertyTemperature
        );
        assert_eq!(EntityCategory::resolve("property_TIME").unwrap(), EntityCategory::PropertyTime);
        assert_eq!(EntityCategory::resolve("descriptor").unwrap(), EntityCategory::Descriptor);
    }

    #[test]
    fn unknown_slot_lists_valid_names() {
        let err = EntityCategory::resolve("Colour").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("Colour"));
        assert!(msg.contains("Property-rate"));
        assert!(msg.contains("Material-recipe"));
    }

    #[test]
    fn alias_listing() {
        assert_eq!(
            EntityCategory::PropertyTemperature.aliases(),
            ["Property_temperature", "Material_temperature"]
        );
        assert_eq!(EntityCategory::MaterialRecipe.aliases(), ["Material_recipe"]);
        assert!(EntityCategory::Device.aliases().is_empty());
        for c in EntityCategory::ALL {
            for a in c.aliases() {
                assert_eq!(EntityCategory::resolve(&a).unwrap(), c);
            }
        }
    }

    #[test]
    fn serde_uses_canonical_names() {
        let json = serde_json::to_string(&EntityCategory::PropertyPressure).unwrap();
        assert_eq!(json, "\"Property-pressure\"");
        let back: EntityCategory = serde_json::from_str("\"Material_recipe\"").unwrap();
        assert_eq!(back, EntityCategory::MaterialRecipe);
        assert!(serde_json::from_str::<EntityCategory>("\"Nope\"").is_err());
    }
}
