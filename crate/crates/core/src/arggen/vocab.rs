use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::template::symbols;

pub type TokenId = u32;

pub const BOS_ID: TokenId = 0;
pub const EOS_ID: TokenId = 1;
pub const PLACEHOLDER_ID: TokenId = 2;
pub const TRIGGER_ID: TokenId = 3;
pub const UNK_ID: TokenId = 4;

const UNK: &str = "<unk>";

/// Word-level vocabulary. Reserved symbols occupy the first ids and are never split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl From<Vec<String>> for Vocab {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as TokenId)).collect();
        Vocab { tokens, index }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.tokens
    }
}

impl Vocab {
    /// Only the five reserved symbols.
    pub fn reserved_only() -> Self {
        Vocab::from(
            [symbols::BOS, symbols::EOS, symbols::PLACEHOLDER, symbols::TRIGGER, UNK].iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        )
    }

    /// Reserved symbols, then "and", then `words` in first-seen order.
    pub fn build<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        let mut v = Vocab::reserved_only();
        v.insert(symbols::AND);
        for w in words {
            v.insert(w);
        }
        v
    }

    pub fn insert(&mut self, word: &str) -> TokenId {
        if let Some(&id) = self.index.get(word) {
            return id;
        }
        let id = self.tokens.len() as TokenId;
        self.tokens.push(word.to_string());
        self.index.insert(word.to_string(), id);
        id
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<TokenId> {
        self.index.get(word).copied()
    }

    pub fn and_id(&self) -> Option<TokenId> {
        self.id(symbols::AND)
    }

    pub fn word(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    /// Unknown words map to `<unk>`.
    pub fn encode<S: AsRef<str>>(&self, words: &[S]) -> Vec<TokenId> {
        words.iter().map(|w| self.id(w.as_ref()).unwrap_or(UNK_ID)).collect()
    }

    /// Like [`encode`](Self::encode) but rejects unknown words.
    pub fn encode_strict<S: AsRef<str>>(&self, words: &[S]) -> Result<Vec<TokenId>> {
        words.iter().map(|w| self.id(w.as_ref()).ok_or_else(|| Error::OutOfVocabulary(w.as_ref().to_string()))).collect()
    }

    pub fn decode(&self, ids: &[TokenId]) -> Vec<String> {
        ids.iter().map(|&i| self.word(i).to_string()).collect()
    }

    /// Ids that may always be generated regardless of the input.
    pub fn reserved_generation_ids(&self) -> Vec<TokenId> {
        let mut ids = vec![BOS_ID, EOS_ID, PLACEHOLDER_ID];
        ids.extend(self.and_id());
        ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_ids_are_fixed() {
        let v = Vocab::build(["truck", "reserved"]);
        assert_eq!(v.id("<s>"), Some(BOS_ID));
        assert_eq!(v.id("</s>"), Some(EOS_ID));
        assert_eq!(v.id("<arg>"), Some(PLACEHOLDER_ID));
        assert_eq!(v.id("<tgr>"), Some(TRIGGER_ID));
        assert_eq!(v.id("and"), Some(5));
        assert_eq!(v.encode(&["truck", "zebra"]), vec![6, UNK_ID]);
        assert!(v.encode_strict(&["zebra"]).is_err());
        assert_eq!(Vocab::reserved_only().len(), 5);
    }

    #[test]
    fn serde_round_trip() {
        let v = Vocab::build(["a", "b"]);
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(serde_json::from_str::<Vocab>(&s).unwrap(), v);
    }
}
