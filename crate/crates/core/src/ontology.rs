//! Event ontology: event types, role schemas with entity-type constraints,
//! fill-in templates, and trigger keywords.
//!
//! The on-disk format is a single JSON document:
//!
//! ```json
//! {
//!   "entity_types": [
//!     {"name": "PER", "statement_phrase": "person"}
//!   ],
//!   "event_types": [
//!     {
//!       "name": "Contact.Contact.Broadcast",
//!       "template": "<arg1> communicated to <arg2> about <arg3> at <arg4> place",
//!       "roles": [
//!         {"name": "Communicator", "slot": 1, "entity_types": ["PER"]},
//!         {"name": "Recipient", "slot": 2, "entity_types": ["PER"]},
//!         {"name": "Topic", "slot": 3, "entity_types": ["ANY"]},
//!         {"name": "Place", "slot": 4, "entity_types": ["LOC"]}
//!       ],
//!       "keywords": ["broadcast", "announce"]
//!     }
//!   ]
//! }
//! ```
//!
//! Slot markers are written `<argN>` and must be numbered contiguously from 1,
//! with exactly one role per distinct marker. The entity-type label `ANY` is
//! reserved and matches every entity type.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reserved entity-type label for unconstrained roles.
pub const UNIVERSAL_TYPE: &str = "ANY";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityTypeDef {
    pub name: String,
    pub statement_phrase: String,
}

impl EntityTypeDef {
    pub fn universal() -> Self {
        EntityTypeDef { name: UNIVERSAL_TYPE.to_string(), statement_phrase: "entity".to_string() }
    }

    pub fn is_universal(&self) -> bool {
        self.name == UNIVERSAL_TYPE
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleDef {
    pub name: String,
    #[serde(rename = "slot")]
    pub slot_index: usize,
    #[serde(rename = "entity_types")]
    pub allowed_entity_types: Vec<String>,
}

impl RoleDef {
    pub fn is_unconstrained(&self) -> bool {
        self.allowed_entity_types.iter().any(|t| t == UNIVERSAL_TYPE)
    }
}

/// One piece of a template after slot markers are recognized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemplatePiece {
    Word(String),
    Slot(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventTypeDef {
    pub name: String,
    pub template: String,
    pub roles: Vec<RoleDef>,
    #[serde(default)]
    pub keywords: Vec<String>,
}

impl EventTypeDef {
    /// Splits the template into words and slot markers.
    pub fn pieces(&self) -> Result<Vec<TemplatePiece>> {
        parse_template(&self.template).map_err(|message| Error::Ontology { event_type: self.name.clone(), message })
    }

    pub fn role(&self, name: &str) -> Option<&RoleDef> {
        self.roles.iter().find(|r| r.name == name)
    }

    pub fn role_for_slot(&self, slot: usize) -> Option<&RoleDef> {
        self.roles.iter().find(|r| r.slot_index == slot)
    }

    fn validate(&self, entity_types: &BTreeMap<String, EntityTypeDef>) -> Result<()> {
        let fail = |message: String| Error::Ontology { event_type: self.name.clone(), message };
        if self.name.is_empty() {
            return Err(fail("empty event type name".into()));
        }
        let slots: BTreeSet<usize> = self
            .pieces()?
            .into_iter()
            .filter_map(|p| match p {
                TemplatePiece::Slot(i) => Some(i),
                TemplatePiece::Word(_) => None,
            })
            .collect();
        if slots.len() != self.roles.len() {
            return Err(fail(format!("template has {} distinct slots but {} roles are declared", slots.len(), self.roles.len())));
        }
        if let Some((pos, &slot)) = slots.iter().enumerate().find(|(i, &s)| s != i + 1) {
            return Err(fail(format!("slot markers are not contiguous from 1: expected <arg{}>, found <arg{slot}>", pos + 1)));
        }
        let mut names = BTreeSet::new();
        let mut seen_slots = BTreeSet::new();
        for role in &self.roles {
            if !names.insert(role.name.as_str()) {
                return Err(fail(format!("duplicate role name `{}`", role.name)));
            }
            if !slots.contains(&role.slot_index) {
                return Err(fail(format!("role `{}` points at <arg{}>, which is not in the template", role.name, role.slot_index)));
            }
            if !seen_slots.insert(role.slot_index) {
                return Err(fail(format!("slot <arg{}> is claimed by two roles", role.slot_index)));
            }
            if role.allowed_entity_types.is_empty() {
                return Err(fail(format!("role `{}` lists no entity types", role.name)));
            }
            for t in &role.allowed_entity_types {
                if t != UNIVERSAL_TYPE && !entity_types.contains_key(t) {
                    return Err(fail(format!("role `{}` references undeclared entity type `{t}`", role.name)));
                }
            }
        }
        Ok(())
    }
}

fn parse_template(template: &str) -> std::result::Result<Vec<TemplatePiece>, String> {
    let mut pieces = Vec::new();
    let mut rest = template;
    while !rest.is_empty() {
        match rest.find("<arg") {
            Some(at) => {
                push_words(&rest[..at], &mut pieces);
                let after = &rest[at + 4..];
                let close = after.find('>').ok_or_else(|| format!("unterminated slot marker in `{template}`"))?;
                let digits = &after[..close];
                let index: usize = digits.parse().map_err(|_| format!("bad slot marker `<arg{digits}>`"))?;
                if index == 0 {
                    return Err("slot markers are numbered from 1".into());
                }
                pieces.push(TemplatePiece::Slot(index));
                rest = &after[close + 1..];
            }
            None => {
                push_words(rest, &mut pieces);
                rest = "";
            }
        }
    }
    Ok(pieces)
}

fn push_words(text: &str, out: &mut Vec<TemplatePiece>) {
    out.extend(text.split_whitespace().map(|w| TemplatePiece::Word(w.to_string())));
}

#[derive(Serialize, Deserialize)]
struct OntologyFile {
    #[serde(default)]
    entity_types: Vec<EntityTypeDef>,
    #[serde(default)]
    event_types: Vec<EventTypeDef>,
}

/// Immutable, validated event ontology.
#[derive(Debug, Clone, PartialEq)]
pub struct EventOntology {
    entity_types: BTreeMap<String, EntityTypeDef>,
    event_types: Vec<EventTypeDef>,
    index: HashMap<String, usize>,
    universal: EntityTypeDef,
}

impl EventOntology {
    pub fn new(entity_types: Vec<EntityTypeDef>, event_types: Vec<EventTypeDef>) -> Result<Self> {
        let mut types = BTreeMap::new();
        for et in entity_types {
            if et.statement_phrase.trim().is_empty() {
                return Err(Error::Ontology {
                    event_type: String::new(),
                    message: format!("entity type `{}` has an empty statement phrase", et.name),
                });
            }
            types.insert(et.name.clone(), et);
        }
        let mut index = HashMap::new();
        for (i, ev) in event_types.iter().enumerate() {
            ev.validate(&types)?;
            if index.insert(ev.name.clone(), i).is_some() {
                return Err(Error::Ontology { event_type: ev.name.clone(), message: "event type declared twice".into() });
            }
        }
        Ok(EventOntology {
            universal: types.get(UNIVERSAL_TYPE).cloned().unwrap_or_else(EntityTypeDef::universal),
            entity_types: types,
            event_types,
            index,
        })
    }

    pub fn from_json_str(text: &str, origin: &Path) -> Result<Self> {
        let file: OntologyFile = serde_json::from_str(text).map_err(|e| Error::json(origin, 0, &e))?;
        Self::new(file.entity_types, file.event_types)
    }

    pub fn to_json_string(&self) -> String {
        let file = OntologyFile { entity_types: self.entity_types.values().cloned().collect(), event_types: self.event_types.clone() };
        serde_json::to_string_pretty(&file).expect("ontology serializes")
    }

    pub fn event_types(&self) -> &[EventTypeDef] {
        &self.event_types
    }

    pub fn entity_types(&self) -> impl Iterator<Item = &EntityTypeDef> {
        self.entity_types.values()
    }

    pub fn len(&self) -> usize {
        self.event_types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.event_types.is_empty()
    }

    pub fn get(&self, event_type: &str) -> Option<&EventTypeDef> {
        self.index.get(event_type).map(|&i| &self.event_types[i])
    }

    /// Exact, case-sensitive lookup. The error lists the closest registered names.
    pub fn template_for(&self, event_type: &str) -> Result<&EventTypeDef> {
        self.get(event_type)
            .ok_or_else(|| Error::UnknownEventType { name: event_type.to_string(), nearest: self.nearest_names(event_type, 3) })
    }

    fn nearest_names(&self, query: &str, n: usize) -> Vec<String> {
        let mut scored: Vec<(usize, &str)> =
            self.event_types.iter().map(|e| (strsim::levenshtein(query, &e.name), e.name.as_str())).collect();
        scored.sort();
        scored.into_iter().take(n).map(|(_, s)| s.to_string()).collect()
    }

    /// The set E_r of entity types a role accepts. Never empty.
    pub fn valid_entity_types(&self, event_type: &str, role: &str) -> Result<Vec<&EntityTypeDef>> {
        let def = self.template_for(event_type)?;
        let role_def = def.role(role).ok_or_else(|| Error::UnknownRole { event_type: event_type.to_string(), role: role.to_string() })?;
        Ok(role_def
            .allowed_entity_types
            .iter()
            .map(|t| if t == UNIVERSAL_TYPE { &self.universal } else { &self.entity_types[t] })
            .collect())
    }
}

pub fn load_ontology(path: impl AsRef<Path>) -> Result<EventOntology> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    EventOntology::from_json_str(&text, path)
}
