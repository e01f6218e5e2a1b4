use std::collections::HashSet;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::EventOntology;

use super::embed::{top_predictions, EmbeddingBackend};
use super::inflect::variants;

/// How many masked predictions an occurrence's keyword must appear among to count.
pub const FILTER_TOP_N: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassVector {
    pub event_type: String,
    pub vector: Vec<f64>,
    pub support_count: usize,
}

impl ClassVector {
    pub fn as_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.vector)
    }
}

/// Mean contextual embedding of the keyword occurrences that survive
/// masked-prediction filtering.
///
/// An occurrence survives when one of its keyword's forms is among the
/// backend's top [`FILTER_TOP_N`] guesses for the masked position. If none
/// survive, every occurrence is used and a warning is logged.
pub fn build_class_vector<B: EmbeddingBackend + ?Sized>(
    backend: &B,
    event_type: &str,
    keywords: &[String],
    sentences: &[Vec<String>],
) -> Result<ClassVector> {
    let forms: HashSet<String> = keywords.iter().flat_map(|k| variants(k)).collect();
    let d = backend.dim();
    let mut all = DVector::zeros(d);
    let mut kept = DVector::zeros(d);
    let (mut n_all, mut n_kept) = (0usize, 0usize);
    for sent in sentences {
        let hits: Vec<usize> = (0..sent.len()).filter(|&i| forms.contains(&sent[i].to_lowercase())).collect();
        if hits.is_empty() {
            continue;
        }
        let embs = backend.token_embeddings(sent);
        for i in hits {
            all += &embs[i];
            n_all += 1;
            let top = top_predictions(backend, sent, i, FILTER_TOP_N);
            if top.iter().any(|w| forms.contains(w)) {
                kept += &embs[i];
                n_kept += 1;
            }
        }
    }
    if n_all == 0 {
        return Err(Error::NoKeywordOccurrence(keywords.to_vec()));
    }
    let (sum, n) = if n_kept == 0 {
        log::warn!("{event_type}: no keyword occurrence passed filtering; averaging all {n_all}");
        (all, n_all)
    } else {
        log::debug!("{event_type}: kept {n_kept} of {n_all} keyword occurrences");
        (kept, n_kept)
    };
    Ok(ClassVector { event_type: event_type.to_string(), vector: (sum / n as f64).as_slice().to_vec(), support_count: n })
}

/// Parses lines of `EventType: kw1, kw2, ...` (a tab works in place of the
/// colon). Blank lines and lines starting with `#` are skipped.
pub fn parse_keywords(text: &str, origin: &Path) -> Result<Vec<(String, Vec<String>)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((name, rest)) = line.split_once([':', '\t']) else {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: n + 1,
                column: 1,
                message: "expected `EventType: keyword, keyword`".into(),
            });
        };
        let kws: Vec<String> = rest.split(',').map(|k| k.trim().to_string()).filter(|k| !k.is_empty()).collect();
        if kws.is_empty() {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: n + 1,
                column: name.len() + 2,
                message: format!("no keywords for {}", name.trim()),
            });
        }
        out.push((name.trim().to_string(), kws));
    }
    Ok(out)
}

pub fn load_keywords(path: &Path) -> Result<Vec<(String, Vec<String>)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_keywords(&text, path)
}

/// Keywords declared in the ontology, for types that have any.
pub fn ontology_keywords(ontology: &EventOntology) -> Vec<(String, Vec<String>)> {
    ontology.event_types().iter().filter(|e| !e.keywords.is_empty()).map(|e| (e.name.clone(), e.keywords.clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Embeds every token as a one-hot vector of its word and predicts a fixed list.
    struct OneHot {
        words: Vec<&'static str>,
        guesses: Vec<&'static str>,
    }

    impl EmbeddingBackend for OneHot {
        fn dim(&self) -> usize {
            self.words.len()
        }
        fn token_embeddings(&self, sentence: &[String]) -> Vec<DVector<f64>> {
            sentence
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    let mut v = DVector::zeros(self.dim());
                    v[self.words.iter().position(|x| x == w).unwrap()] = 1.0 + i as f64;
                    v
                })
                .collect()
        }
        fn masked_prediction(&self, _: &[String], _: usize) -> Vec<(String, f64)> {
            self.guesses.iter().map(|g| (g.to_string(), 1.0 / self.guesses.len() as f64)).collect()
        }
    }

    fn s(t: &str) -> Vec<String> {
        t.split(' ').map(str::to_string).collect()
    }

    #[test]
    fn mean_of_retained_occurrences() {
        let b = OneHot { words: vec!["they", "hired", "him", "we", "employ"], guesses: vec!["hired", "employ"] };
        let sents = vec![s("they hired him"), s("we employ him")];
        let c = build_class_vector(&b, "StartPosition", &["hire".into(), "employ".into()], &sents).unwrap();
        assert_eq!(c.support_count, 2);
        // "hired" at position 1 has value 2; "employ" at position 1 has value 2.
        assert_eq!(c.vector, vec![0.0, 1.0, 0.0, 0.0, 1.0]);

        let one = build_class_vector(&b, "StartPosition", &["hire".into()], &sents[..1]).unwrap();
        assert_eq!(one.vector, vec![0.0, 2.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn fallback_and_missing() {
        let b = OneHot { words: vec!["they", "hired", "him"], guesses: vec!["they"] };
        let c = build_class_vector(&b, "T", &["hire".into()], &[s("they hired him")]).unwrap();
        assert_eq!(c.support_count, 1);
        assert!(matches!(build_class_vector(&b, "T", &["appoint".into()], &[s("they hired him")]), Err(Error::NoKeywordOccurrence(_))));
    }

    #[test]
    fn keyword_file() {
        let kws = parse_keywords("# c\nPersonnel.StartPosition: hire, employ, appoint\n\nLife.Die\tkill\n", Path::new("k")).unwrap();
        assert_eq!(kws[0].1, vec!["hire", "employ", "appoint"]);
        assert_eq!(kws[1], ("Life.Die".to_string(), vec!["kill".to_string()]));
        assert!(parse_keywords("Life.Die kill", Path::new("k")).is_err());
    }
}
