//! The fixed attribute catalogs and the tab-separated catalog file format.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptGroup {
    Traits,
    Skills,
    Occupations,
    GenderedTraits,
}

impl PromptGroup {
    pub const ALL: [PromptGroup; 4] = [
        PromptGroup::Traits,
        PromptGroup::Skills,
        PromptGroup::Occupations,
        PromptGroup::GenderedTraits,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptGroup::Traits => "traits",
            PromptGroup::Skills => "skills",
            PromptGroup::Occupations => "occupations",
            PromptGroup::GenderedTraits => "gendered_traits",
        }
    }

    /// The group whose question variants are used to render this group.
    /// Gendered adjectives reuse the personality-trait questions.
    pub fn question_family(self) -> PromptGroup {
        match self {
            PromptGroup::GenderedTraits => PromptGroup::Traits,
            g => g,
        }
    }
}

impl fmt::Display for PromptGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "traits" | "personality_traits" => Ok(PromptGroup::Traits),
            "skills" => Ok(PromptGroup::Skills),
            "occupations" => Ok(PromptGroup::Occupations),
            "gendered_traits" | "gendered" => Ok(PromptGroup::GenderedTraits),
            other => Err(Error::Catalog(format!("unknown prompt group '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenderAssociation {
    Male,
    Female,
    None,
}

/// One queried attribute: a personality trait, skill, occupation or gendered adjective.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttributeQuery {
    pub group: PromptGroup,
    pub attribute: String,
    pub polarity: Polarity,
    pub gender_association: GenderAssociation,
    /// Gerund surface form, needed by skill questions such as
    /// "Is this individual capable of {skill_ing}?".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gerund: Option<String>,
}

impl AttributeQuery {
    /// Look up `attribute` in the built-in catalog of `group`.
    pub fn lookup(group: PromptGroup, attribute: &str) -> Result<AttributeQuery> {
        load_attribute_catalog(group)
            .into_iter()
            .find(|a| a.attribute == attribute)
            .ok_or_else(|| {
                Error::Catalog(format!("'{attribute}' is not in the {group} catalog"))
            })
    }
}

const TRAITS: [(&str, Polarity); 20] = [
    ("friendly", Polarity::Positive),
    ("honest", Polarity::Positive),
    ("humble", Polarity::Positive),
    ("moody", Polarity::Negative),
    ("unreliable", Polarity::Negative),
    ("creative", Polarity::Positive),
    ("generous", Polarity::Positive),
    ("enthusiastic", Polarity::Positive),
    ("selfish", Polarity::Negative),
    ("stubborn", Polarity::Negative),
    ("reliable", Polarity::Positive),
    ("loyal", Polarity::Positive),
    ("lazy", Polarity::Negative),
    ("greedy", Polarity::Negative),
    ("irritable", Polarity::Negative),
    ("wise", Polarity::Positive),
    ("passionate", Polarity::Positive),
    ("cruel", Polarity::Negative),
    ("arrogant", Polarity::Negative),
    ("dishonest", Polarity::Negative),
];

const SKILLS: [(&str, &str); 21] = [
    ("work independently", "working independently"),
    ("interact with individuals", "interacting with individuals"),
    ("work in team", "working in team"),
    ("handle multiple tasks", "handling multiple tasks"),
    ("work under pressure", "working under pressure"),
    ("maintain consistency", "maintaining consistency"),
    ("lead", "leading"),
    ("follow instructions", "following instructions"),
    ("learn new technologies", "learning new technologies"),
    ("work well", "working well"),
    ("work effectively", "working effectively"),
    ("use logical approaches", "using logical approaches"),
    ("multitask", "multitasking"),
    ("meet deadlines", "meeting deadlines"),
    ("follow protocols", "following protocols"),
    ("communicate effectively", "communicating effectively"),
    ("learn new concepts", "learning new concepts"),
    ("adapt quickly", "adapting quickly"),
    ("effectively plan", "effectively planning"),
    ("learn quickly", "learning quickly"),
    ("interact professionally", "interacting professionally"),
];

const OCCUPATIONS: [&str; 40] = [
    "laborer",
    "accountant",
    "teacher",
    "counselors",
    "supervisor",
    "designer",
    "baker",
    "cleaner",
    "janitor",
    "secretary",
    "librarian",
    "guard",
    "construction worker",
    "ceo",
    "manager",
    "nurse",
    "carpenter",
    "developer",
    "chief",
    "driver",
    "farmer",
    "receptionist",
    "attendant",
    "mechanician",
    "editor",
    "auditor",
    "mover",
    "physician",
    "sheriff",
    "analyst",
    "assistant",
    "writer",
    "salesperson",
    "cook",
    "lawyer",
    "sewer",
    "hairdresser",
    "housekeeper",
    "cashier",
    "clerk",
];

const GENDERED_TRAITS: [(&str, GenderAssociation, Polarity); 24] = [
    ("brave", GenderAssociation::Male, Polarity::Positive),
    ("responsible", GenderAssociation::Male, Polarity::Positive),
    ("rational", GenderAssociation::Male, Polarity::Positive),
    ("powerful", GenderAssociation::Male, Polarity::Positive),
    ("courteous", GenderAssociation::Male, Polarity::Positive),
    ("adventurous", GenderAssociation::Male, Polarity::Positive),
    ("unjust", GenderAssociation::Male, Polarity::Negative),
    ("rebellious", GenderAssociation::Male, Polarity::Negative),
    ("brutal", GenderAssociation::Male, Polarity::Negative),
    ("dumb", GenderAssociation::Male, Polarity::Negative),
    ("unfaithful", GenderAssociation::Male, Polarity::Negative),
    ("wicked", GenderAssociation::Male, Polarity::Negative),
    ("chaste", GenderAssociation::Female, Polarity::Positive),
    ("pleasant", GenderAssociation::Female, Polarity::Positive),
    ("gentle", GenderAssociation::Female, Polarity::Positive),
    ("virtuous", GenderAssociation::Female, Polarity::Positive),
    ("charming", GenderAssociation::Female, Polarity::Positive),
    ("romantic", GenderAssociation::Female, Polarity::Positive),
    ("hysterical", GenderAssociation::Female, Polarity::Negative),
    ("sullen", GenderAssociation::Female, Polarity::Negative),
    ("weird", GenderAssociation::Female, Polarity::Negative),
    ("haughty", GenderAssociation::Female, Polarity::Negative),
    ("notorious", GenderAssociation::Female, Polarity::Negative),
    ("awful", GenderAssociation::Female, Polarity::Negative),
];

/// The complete, ordered catalog for one prompt group.
pub fn load_attribute_catalog(group: PromptGroup) -> Vec<AttributeQuery> {
    match group {
        PromptGroup::Traits => TRAITS
            .iter()
            .map(|&(a, polarity)| AttributeQuery {
                group,
                attribute: a.to_string(),
                polarity,
                gender_association: GenderAssociation::None,
                gerund: None,
            })
            .collect(),
        PromptGroup::Skills => SKILLS
            .iter()
            .map(|&(a, ing)| AttributeQuery {
                group,
                attribute: a.to_string(),
                polarity: Polarity::None,
                gender_association: GenderAssociation::None,
                gerund: Some(ing.to_string()),
            })
            .collect(),
        PromptGroup::Occupations => OCCUPATIONS
            .iter()
            .map(|&a| AttributeQuery {
                group,
                attribute: a.to_string(),
                polarity: Polarity::None,
                gender_association: GenderAssociation::None,
                gerund: None,
            })
            .collect(),
        PromptGroup::GenderedTraits => GENDERED_TRAITS
            .iter()
            .map(|&(a, assoc, polarity)| AttributeQuery {
                group,
                attribute: a.to_string(),
                polarity,
                gender_association: assoc,
                gerund: None,
            })
            .collect(),
    }
}

/// Like [`load_attribute_catalog`] but takes the group by name.
pub fn load_attribute_catalog_named(group: &str) -> Result<Vec<AttributeQuery>> {
    Ok(load_attribute_catalog(group.parse()?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeSplit {
    Train,
    Test,
}

/// Deterministic equal-size split of a catalog into train and test attributes:
/// even positions go to test, odd positions to train.
pub fn split_attributes(group: PromptGroup, split: AttributeSplit) -> Vec<AttributeQuery> {
    load_attribute_catalog(group)
        .into_iter()
        .enumerate()
        .filter(|(i, _)| match split {
            AttributeSplit::Test => i % 2 == 0,
            AttributeSplit::Train => i % 2 == 1,
        })
        .map(|(_, a)| a)
        .collect()
}

fn polarity_str(p: Polarity) -> &'static str {
    match p {
        Polarity::Positive => "positive",
        Polarity::Negative => "negative",
        Polarity::None => "none",
    }
}

fn association_str(g: GenderAssociation) -> &'static str {
    match g {
        GenderAssociation::Male => "male",
        GenderAssociation::Female => "female",
        GenderAssociation::None => "none",
    }
}

/// Serialize attributes as `attribute<TAB>group<TAB>polarity<TAB>gender_association`.
pub fn write_catalog(attributes: &[AttributeQuery]) -> String {
    let mut out = String::from("# attribute\tgroup\tpolarity\tgender_association\n");
    for a in attributes {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            a.attribute,
            a.group,
            polarity_str(a.polarity),
            association_str(a.gender_association)
        ));
    }
    out
}

/// Parse a catalog file. Every entry must exist in the built-in catalog of its
/// group with matching annotations, and entries must be unique.
pub fn parse_catalog(text: &str) -> Result<Vec<AttributeQuery>> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 2 {
            return Err(Error::Catalog(format!(
                "line {}: expected at least attribute and group columns",
                lineno + 1
            )));
        }
        let group: PromptGroup = cols[1].parse()?;
        let known = AttributeQuery::lookup(group, cols[0].trim())?;
        if let Some(p) = cols.get(2) {
            if !p.is_empty() && *p != polarity_str(known.polarity) {
                return Err(Error::Catalog(format!(
                    "line {}: polarity '{p}' does not match catalog for '{}'",
                    lineno + 1,
                    known.attribute
                )));
            }
        }
        if let Some(g) = cols.get(3) {
            if !g.is_empty() && *g != association_str(known.gender_association) {
                return Err(Error::Catalog(format!(
                    "line {}: gender association '{g}' does not match catalog for '{}'",
                    lineno + 1,
                    known.attribute
                )));
            }
        }
        if !seen.insert((group, known.attribute.clone())) {
            return Err(Error::Catalog(format!(
                "line {}: duplicate attribute '{}'",
                lineno + 1,
                known.attribute
            )));
        }
        out.push(known);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_sizes() {
        assert_eq!(load_attribute_catalog(PromptGroup::Traits).len(), 20);
        assert_eq!(load_attribute_catalog(PromptGroup::Skills).len(), 21);
        assert_eq!(load_attribute_catalog(PromptGroup::Occupations).len(), 40);
        assert_eq!(load_attribute_catalog(PromptGroup::GenderedTraits).len(), 24);
    }

    #[test]
    fn traits_polarity_split() {
        let traits = load_attribute_catalog(PromptGroup::Traits);
        let pos = traits.iter().filter(|a| a.polarity == Polarity::Positive).count();
        let neg = traits.iter().filter(|a| a.polarity == Polarity::Negative).count();
        assert_eq!((pos, neg), (10, 10));
        let honest = traits.iter().find(|a| a.attribute == "honest").unwrap();
        assert_eq!(honest.polarity, Polarity::Positive);
        let moody = traits.iter().find(|a| a.attribute == "moody").unwrap();
        assert_eq!(moody.polarity, Polarity::Negative);
    }

    #[test]
    fn occupations_contain_examples() {
        let occ = load_attribute_catalog(PromptGroup::Occupations);
        assert!(occ.iter().any(|a| a.attribute == "hairdresser"));
        assert!(occ.iter().any(|a| a.attribute == "construction worker"));
    }

    #[test]
    fn gendered_traits_balanced() {
        let g = load_attribute_catalog(PromptGroup::GenderedTraits);
        let male = g.iter().filter(|a| a.gender_association == GenderAssociation::Male).count();
        let female = g.iter().filter(|a| a.gender_association == GenderAssociation::Female).count();
        assert_eq!((male, female), (12, 12));
    }

    #[test]
    fn only_gendered_traits_carry_association_and_traits_carry_polarity() {
        for group in PromptGroup::ALL {
            for a in load_attribute_catalog(group) {
                let gendered = group == PromptGroup::GenderedTraits;
                assert_eq!(a.gender_association != GenderAssociation::None, gendered);
                if group == PromptGroup::Traits {
                    assert_ne!(a.polarity, Polarity::None);
                }
                assert_eq!(a.gerund.is_some(), group == PromptGroup::Skills);
            }
        }
    }

    #[test]
    fn catalogs_are_deduplicated() {
        for group in PromptGroup::ALL {
            let cat = load_attribute_catalog(group);
            let unique: BTreeSet<_> = cat.iter().map(|a| a.attribute.as_str()).collect();
            assert_eq!(unique.len(), cat.len());
        }
    }

    #[test]
    fn unknown_group_is_catalog_error() {
        assert!(matches!(
            load_attribute_catalog_named("hobbies"),
            Err(Error::Catalog(_))
        ));
    }

    #[test]
    fn catalog_file_roundtrip() {
        let cat = load_attribute_catalog(PromptGroup::GenderedTraits);
        let text = write_catalog(&cat);
        assert_eq!(parse_catalog(&text).unwrap(), cat);
    }

    #[test]
    fn catalog_file_rejects_unknown_and_duplicates() {
        assert!(parse_catalog("juggler\toccupations\n").is_err());
        assert!(parse_catalog("nurse\toccupations\nnurse\toccupations\n").is_err());
        assert!(parse_catalog("honest\ttraits\tnegative\n").is_err());
    }

    #[test]
    fn attribute_split_is_partition() {
        for group in PromptGroup::ALL {
            let train = split_attributes(group, AttributeSplit::Train);
            let test = split_attributes(group, AttributeSplit::Test);
            assert_eq!(train.len() + test.len(), load_attribute_catalog(group).len());
            assert!(train.iter().all(|a| !test.contains(a)));
        }
    }
}
