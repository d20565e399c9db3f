//! Seeded synthetic documents and dialogues for tests, demos and
//! benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dialogue::{DialogueAct, DialogueFlow, DialogueRecord, Turn};
use crate::document::{ingest_html, DocMeta, Document};

pub const DOMAINS: [&str; 4] = ["ssa", "va", "dmv", "studentaid"];

const NOUNS: [&str; 24] = [
    "license", "address", "benefits", "claim", "card", "record", "payment", "account", "form", "appeal",
    "permit", "refund", "statement", "loan", "grant", "pension", "title", "registration", "insurance",
    "certificate", "application", "deposit", "schedule", "report",
];
const VERBS: [&str; 12] = [
    "renew", "update", "submit", "review", "request", "cancel", "replace", "verify", "transfer", "print", "sign",
    "upload",
];
const PAST: [&str; 10] = [
    "moved", "changed", "lost", "received", "missed", "filed", "closed", "opened", "damaged", "returned",
];
const MODALS: [&str; 4] = ["must", "can", "should", "may"];
const TAILS: [&str; 8] = [
    "online", "by mail", "at a local office", "within ten days", "before the deadline", "in person",
    "through your account", "by phone",
];

fn pick<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).copied().unwrap_or("")
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn solution<R: Rng>(rng: &mut R) -> String {
    format!("You {} {} your {} {}.", pick(rng, &MODALS), pick(rng, &VERBS), pick(rng, &NOUNS), pick(rng, &TAILS))
}

fn conditional<R: Rng>(rng: &mut R) -> String {
    if rng.gen_bool(0.5) {
        format!(
            "If you {} your {}, you {} {} the {} {}.",
            pick(rng, &PAST),
            pick(rng, &NOUNS),
            pick(rng, &MODALS),
            pick(rng, &VERBS),
            pick(rng, &NOUNS),
            pick(rng, &TAILS)
        )
    } else {
        format!(
            "You {} {} your {} {} unless you {} the {} already.",
            pick(rng, &MODALS),
            pick(rng, &VERBS),
            pick(rng, &NOUNS),
            pick(rng, &TAILS),
            pick(rng, &PAST),
            pick(rng, &NOUNS)
        )
    }
}

/// One page: a title, three or four titled sections of short paragraphs,
/// some with conditional sentences, and an eligibility list.
pub fn synth_html<R: Rng>(rng: &mut R, title: &str) -> String {
    let mut html = format!("<html><head><title>{title}</title></head><body><h1>{title}</h1>");
    let sections = rng.gen_range(3..=4);
    for s in 0..sections {
        html.push_str(&format!("<h2>{} your {}</h2>", capitalize(pick(rng, &VERBS)), pick(rng, &NOUNS)));
        for _ in 0..rng.gen_range(2..=3) {
            html.push_str("<p>");
            for k in 0..2 {
                let sentence = if rng.gen_bool(0.45) { conditional(rng) } else { solution(rng) };
                if k > 0 {
                    html.push(' ');
                }
                html.push_str(&sentence);
            }
            html.push_str("</p>");
        }
        if s == 0 || rng.gen_bool(0.3) {
            html.push_str(&format!("<p>You may get a {} if:</p><ul>", pick(rng, &NOUNS)));
            for _ in 0..rng.gen_range(2..=3) {
                html.push_str(&format!("<li>you {} your {} recently</li>", pick(rng, &PAST), pick(rng, &NOUNS)));
            }
            html.push_str("</ul>");
        }
    }
    html.push_str("</body></html>");
    html
}

/// `n` documents with ids `doc-000`, ... spread over the four domains.
pub fn synth_corpus(seed: u64, n: usize) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let domain = DOMAINS[i % DOMAINS.len()];
            let title = format!("{} {} services", capitalize(pick(&mut rng, &NOUNS)), pick(&mut rng, &NOUNS));
            let html = synth_html(&mut rng, &title);
            let meta = DocMeta {
                doc_id: format!("doc-{i:03}"),
                domain: domain.to_string(),
                url: format!("https://{domain}.example.gov/doc-{i:03}"),
                ..Default::default()
            };
            ingest_html(&html, meta).expect("synthetic page has content")
        })
        .collect()
}

fn clause(text: &str) -> String {
    let t = text.trim().trim_end_matches(['.', ',', ':', ';']);
    let mut c = t.chars();
    match c.next() {
        Some(f) => f.to_lowercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Stand-in utterance for a scene, built from its grounding text.
pub fn template_utterance(da: DialogueAct, span_text: &str, outcome: Option<bool>) -> String {
    let c = clause(span_text);
    match da {
        DialogueAct::UserRequestQuery => format!("I read that {c}. What should I do?"),
        DialogueAct::AgentRequestQuery => format!("Can you confirm that {c}?"),
        DialogueAct::UserRespondYesno => {
            if outcome == Some(false) {
                "No, that is not my case.".into()
            } else {
                "Yes, that is right.".into()
            }
        }
        DialogueAct::AgentRespondReply => format!("{}.", capitalize(&c)),
    }
}

/// Turn each flow into a dialogue with templated utterances.
pub fn synth_dialogues(flows: &[DialogueFlow], docs: &[Document]) -> Vec<DialogueRecord> {
    flows
        .iter()
        .filter_map(|f| {
            let doc = docs.iter().find(|d| d.doc_id == f.doc_id)?;
            let turns = f
                .scenes
                .iter()
                .map(|s| {
                    let text = s
                        .grounding_sp_ids
                        .iter()
                        .filter_map(|id| doc.span(id).map(|sp| doc.span_text(sp)))
                        .collect::<Vec<_>>()
                        .join(" ");
                    Turn {
                        turn_id: s.turn_id,
                        role: s.role,
                        da: s.da,
                        grounding_sp_ids: s.grounding_sp_ids.clone(),
                        doc_id: doc.doc_id.clone(),
                        irrelevant_marker: s.irrelevant_marker,
                        utterance: template_utterance(s.da, &text, s.yesno_outcome),
                    }
                })
                .collect();
            Some(DialogueRecord {
                dial_id: format!("dial-{}", f.flow_id),
                doc_ids: vec![doc.doc_id.clone()],
                domain: doc.domain.clone(),
                turns,
            })
        })
        .collect()
}

fn pseudo_word<R: Rng>(rng: &mut R) -> String {
    const SYL: [&str; 16] = ["ka", "lo", "mi", "ne", "tu", "ra", "si", "po", "ve", "da", "gu", "fe", "zo", "bi", "ha", "wu"];
    (0..3).map(|_| pick(rng, &SYL)).collect()
}

/// A retrieval benchmark: `n_docs` documents, each with its own handful of
/// topic words drawn from a shared pool, and `per_doc` dialogues per
/// document. Every turn mentions one topic word of its document among
/// common filler and two random topic words, so longer queries carry more
/// evidence.
pub fn retrieval_benchmark(seed: u64, n_docs: usize, per_doc: usize) -> (Vec<Document>, Vec<DialogueRecord>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vocab: Vec<String> = Vec::new();
    while vocab.len() < 4 * n_docs.max(1) {
        let w = pseudo_word(&mut rng);
        if !vocab.contains(&w) {
            vocab.push(w);
        }
    }
    const FILLER: [&str; 12] =
        ["help", "need", "want", "know", "please", "question", "about", "my", "how", "where", "get", "do"];
    let mut docs = Vec::new();
    let mut dialogues = Vec::new();
    for i in 0..n_docs {
        let topics: Vec<String> = vocab.choose_multiple(&mut rng, 12).cloned().collect();
        let domain = DOMAINS[i % DOMAINS.len()];
        let mut html = format!("<h1>Topic {i}</h1>");
        for chunk in topics.chunks(3) {
            html.push_str("<p>");
            for w in chunk {
                for _ in 0..rng.gen_range(1..=3) {
                    html.push_str(&format!("You {} {w} {}. ", pick(&mut rng, &MODALS), pick(&mut rng, &TAILS)));
                }
            }
            html.push_str("</p>");
        }
        let doc_id = format!("bench-{i:03}");
        let meta = DocMeta { doc_id: doc_id.clone(), domain: domain.into(), ..Default::default() };
        docs.push(ingest_html(&html, meta).expect("benchmark page has content"));
        for k in 0..per_doc {
            let turns = (0..6)
                .map(|t| {
                    let mut words: Vec<String> = FILLER.choose_multiple(&mut rng, 3).map(|s| s.to_string()).collect();
                    words.push(topics.choose(&mut rng).cloned().unwrap_or_default());
                    for _ in 0..2 {
                        words.push(vocab.choose(&mut rng).cloned().unwrap_or_default());
                    }
                    words.shuffle(&mut rng);
                    let da = if t % 2 == 0 { DialogueAct::UserRequestQuery } else { DialogueAct::AgentRespondReply };
                    Turn {
                        turn_id: t + 1,
                        role: da.role(),
                        da,
                        grounding_sp_ids: Vec::new(),
                        doc_id: doc_id.clone(),
                        irrelevant_marker: false,
                        utterance: words.join(" "),
                    }
                })
                .collect();
            dialogues.push(DialogueRecord {
                dial_id: format!("bench-{i:03}-{k}"),
                doc_ids: vec![doc_id.clone()],
                domain: domain.into(),
                turns,
            });
        }
    }
    (docs, dialogues)
}
