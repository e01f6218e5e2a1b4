//! Trigger–argument distance statistics.

use serde::Serialize;

use super::{informative_for, nearest_mention, ArgumentView, Document};

#[derive(Debug, Clone, Serialize)]
pub struct DistanceStats {
    pub view: ArgumentView,
    pub num_arguments: usize,
    /// Mean trigger–argument gap in words.
    pub mean_distance: f64,
    /// `(bin_start, count)` pairs with bins of `bin_width` words.
    pub histogram: Vec<(usize, usize)>,
    pub bin_width: usize,
    /// Among arguments whose nearest mention sits in the trigger's sentence, the
    /// share for which that mention is also the informative one.
    pub same_sentence_informative_fraction: f64,
    pub same_sentence_arguments: usize,
}

pub fn distance_stats(docs: &[Document], view: ArgumentView, bin_width: usize) -> DistanceStats {
    let bin_width = bin_width.max(1);
    let mut distances = Vec::new();
    let mut same_sentence = 0usize;
    let mut same_sentence_informative = 0usize;
    for doc in docs {
        for ev in &doc.event_mentions {
            let trig_sent = doc.sentence_of(ev.trigger_span.start);
            for a in &ev.arguments {
                let nearest = nearest_mention(doc, ev.trigger_span, &a.mention_id);
                let informative = informative_for(doc, &a.mention_id);
                let chosen = match view {
                    ArgumentView::Nearest => nearest,
                    ArgumentView::Informative => informative,
                };
                let Some(m) = chosen else { continue };
                distances.push(ev.trigger_span.gap(&m.span));
                if let Some(n) = nearest {
                    if trig_sent.is_some() && doc.sentence_of(n.span.start) == trig_sent {
                        same_sentence += 1;
                        if informative.map(|i| &i.mention_id) == Some(&n.mention_id) {
                            same_sentence_informative += 1;
                        }
                    }
                }
            }
        }
    }
    let mean = if distances.is_empty() { 0.0 } else { distances.iter().sum::<usize>() as f64 / distances.len() as f64 };
    let mut bins = std::collections::BTreeMap::new();
    for d in &distances {
        *bins.entry(d / bin_width * bin_width).or_insert(0) += 1;
    }
    DistanceStats {
        view,
        num_arguments: distances.len(),
        mean_distance: mean,
        histogram: bins.into_iter().collect(),
        bin_width,
        same_sentence_informative_fraction: if same_sentence == 0 { 0.0 } else { same_sentence_informative as f64 / same_sentence as f64 },
        same_sentence_arguments: same_sentence,
    }
}
