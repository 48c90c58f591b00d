//! Hierarchical topic map over ontology classes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::embed::{cosine, EmbedError, Embedder, EmbeddingVector};
use crate::exec::Exec;
use crate::ontology::{OntologyClass, OntologyModel};
use crate::rdf::Iri;

/// Words never used as keywords. Template words are always on the list.
pub const STOPWORDS: [&str; 50] = [
    "a", "about", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been", "but", "by", "can",
    "class", "for", "from", "had", "has", "have", "if", "in", "into", "is", "it", "its", "may", "more",
    "none", "not", "of", "on", "or", "other", "parents", "properties", "such", "than", "that", "the",
    "their", "then", "there", "these", "this", "to", "was", "which", "with",
];

pub const DEFAULT_TOP_N: usize = 10;
pub const MAX_LABEL_CHARS: usize = 60;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassDocument {
    pub class_iri: Iri,
    pub text: String,
}

fn join_or_none(items: Vec<String>) -> String {
    if items.is_empty() {
        "none".to_string()
    } else {
        items.join(", ")
    }
}

/// Templated text for a class: its label, all its ancestors, and every
/// property whose domain is the class or one of its ancestors.
pub fn class_document(class: &OntologyClass, ontology: &OntologyModel) -> ClassDocument {
    let ancestors = ontology.ancestors(&class.iri);
    let parents = ancestors.iter().map(|a| ontology.class_label(a)).collect();
    let properties = ontology
        .properties()
        .filter(|p| {
            p.domain
                .as_ref()
                .is_some_and(|d| d == &class.iri || ancestors.contains(d))
        })
        .map(|p| {
            format!(
                "{} ({})",
                p.label,
                ontology.range_label(p).unwrap_or_else(|| "any".to_string())
            )
        })
        .collect();
    ClassDocument {
        class_iri: class.iri.clone(),
        text: format!(
            "Class: {}. Parents: {}. Properties: {}.",
            class.label,
            join_or_none(parents),
            join_or_none(properties)
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keyword {
    pub term: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Topic {
    pub id: usize,
    pub label: String,
    pub keywords: Vec<Keyword>,
    pub member_classes: BTreeSet<Iri>,
    pub parent_topic_id: Option<usize>,
    pub children: Vec<usize>,
    pub centroid: EmbeddingVector,
}

impl Topic {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TopicTree {
    pub topics: BTreeMap<usize, Topic>,
    pub roots: BTreeSet<usize>,
}

impl TopicTree {
    pub fn leaves(&self) -> impl Iterator<Item = &Topic> {
        self.topics.values().filter(|t| t.is_leaf())
    }

    pub fn get(&self, id: usize) -> Option<&Topic> {
        self.topics.get(&id)
    }
}

pub fn default_leaf_count(classes: usize) -> usize {
    ((classes as f64).sqrt().ceil() as usize).max(2)
}

struct Cluster {
    members: Vec<Iri>,
    topic: Option<usize>,
}

/// Average-linkage agglomerative clustering under cosine distance.
///
/// Merging stops at `k` clusters, which become the leaf topics (ids ordered by
/// smallest member IRI); further merges up to a single root become internal
/// topics, numbered in merge order. Equal distances are resolved by the
/// smaller pair of member-IRI lists. Keywords and labels are left empty.
pub fn cluster_classes(vectors: &BTreeMap<Iri, EmbeddingVector>, k: usize, exec: Exec) -> TopicTree {
    let iris: Vec<&Iri> = vectors.keys().collect();
    let n = iris.len();
    if n == 0 {
        return TopicTree::default();
    }
    let k = k.clamp(1, n);
    let vecs: Vec<&EmbeddingVector> = vectors.values().collect();
    let rows = exec.map_range(n, |i| {
        (0..n)
            .map(|j| 1.0 - cosine(vecs[i], vecs[j]).unwrap_or(0.0))
            .collect::<Vec<f64>>()
    });
    let mut dist = rows;
    let mut clusters: Vec<Option<Cluster>> = iris
        .iter()
        .map(|iri| {
            Some(Cluster {
                members: vec![(*iri).clone()],
                topic: None,
            })
        })
        .collect();
    let mut alive = n;
    let mut tree = TopicTree::default();

    while alive > 1 {
        if alive == k && tree.topics.is_empty() {
            emit_leaves(&mut clusters, vectors, &mut tree);
        }
        // slot i always holds the cluster whose smallest member is iris[i]
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if clusters[i].is_none() {
                continue;
            }
            for j in (i + 1)..n {
                if clusters[j].is_none() {
                    continue;
                }
                let d = dist[i][j];
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, i, j));
                }
            }
        }
        let (_, i, j) = best.expect("at least two clusters");
        let b = clusters[j].take().expect("alive");
        let a = clusters[i].as_mut().expect("alive");
        let (na, nb) = (a.members.len() as f64, b.members.len() as f64);
        for m in 0..n {
            if m != i && m != j {
                let d = (na * dist[i][m] + nb * dist[j][m]) / (na + nb);
                dist[i][m] = d;
                dist[m][i] = d;
            }
        }
        a.members.extend(b.members);
        a.members.sort();
        alive -= 1;
        if !tree.topics.is_empty() {
            let left = a.topic.expect("leaf emitted");
            let right = b.topic.expect("leaf emitted");
            let id = tree.topics.len();
            let members: BTreeSet<Iri> = a.members.iter().cloned().collect();
            let centroid = EmbeddingVector::mean(members.iter().map(|m| &vectors[m]), dimension_of(vectors));
            for child in [left, right] {
                tree.topics.get_mut(&child).expect("child").parent_topic_id = Some(id);
            }
            tree.topics.insert(
                id,
                Topic {
                    id,
                    label: String::new(),
                    keywords: Vec::new(),
                    member_classes: members,
                    parent_topic_id: None,
                    children: vec![left, right],
                    centroid,
                },
            );
            a.topic = Some(id);
        }
    }
    if tree.topics.is_empty() {
        emit_leaves(&mut clusters, vectors, &mut tree);
    }
    tree.roots = tree
        .topics
        .values()
        .filter(|t| t.parent_topic_id.is_none())
        .map(|t| t.id)
        .collect();
    tree
}

fn dimension_of(vectors: &BTreeMap<Iri, EmbeddingVector>) -> usize {
    vectors.values().next().map_or(0, EmbeddingVector::dimension)
}

fn emit_leaves(clusters: &mut [Option<Cluster>], vectors: &BTreeMap<Iri, EmbeddingVector>, tree: &mut TopicTree) {
    // slots are in IRI order and each slot is keyed by its smallest member
    let dimension = dimension_of(vectors);
    for slot in clusters.iter_mut().flatten() {
        let id = tree.topics.len();
        let members: BTreeSet<Iri> = slot.members.iter().cloned().collect();
        let centroid = EmbeddingVector::mean(members.iter().map(|m| &vectors[m]), dimension);
        tree.topics.insert(
            id,
            Topic {
                id,
                label: String::new(),
                keywords: Vec::new(),
                member_classes: members,
                parent_topic_id: None,
                children: Vec::new(),
                centroid,
            },
        );
        slot.topic = Some(id);
    }
}

/// Lowercased maximal alphanumeric runs of at least two characters, without stopwords.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2 && !STOPWORDS.contains(t))
        .map(str::to_string)
        .collect()
}

/// Full c-TF-IDF weight table per leaf: `tf(t,c) * ln(1 + A / f(t))`.
pub fn ctfidf_weights(tree: &TopicTree, documents: &BTreeMap<Iri, String>) -> BTreeMap<usize, BTreeMap<String, f64>> {
    let mut tf: BTreeMap<usize, BTreeMap<String, f64>> = BTreeMap::new();
    let mut total: BTreeMap<String, f64> = BTreeMap::new();
    let mut tokens_total = 0usize;
    let mut leaves = 0usize;
    for leaf in tree.leaves() {
        leaves += 1;
        let counts = tf.entry(leaf.id).or_default();
        for member in &leaf.member_classes {
            let Some(doc) = documents.get(member) else { continue };
            for token in tokenize(doc) {
                tokens_total += 1;
                *total.entry(token.clone()).or_default() += 1.0;
                *counts.entry(token).or_default() += 1.0;
            }
        }
    }
    if leaves == 0 {
        return BTreeMap::new();
    }
    let a = tokens_total as f64 / leaves as f64;
    tf.into_iter()
        .map(|(id, counts)| {
            let weights = counts
                .into_iter()
                .map(|(t, n)| {
                    let w = n * (1.0 + a / total[&t]).ln();
                    (t, w)
                })
                .collect();
            (id, weights)
        })
        .collect()
}

fn top_terms(weights: &BTreeMap<String, f64>, top_n: usize) -> Vec<Keyword> {
    let mut all: Vec<Keyword> = weights
        .iter()
        .map(|(t, &w)| Keyword {
            term: t.clone(),
            weight: w,
        })
        .collect();
    all.sort_by(|x, y| y.weight.total_cmp(&x.weight).then_with(|| x.term.cmp(&y.term)));
    all.truncate(top_n);
    all
}

/// Top-N keywords for every topic. Leaves use their own c-TF-IDF weights;
/// an internal topic sums the weights of the leaves beneath it.
pub fn ctfidf_keywords(
    tree: &TopicTree,
    documents: &BTreeMap<Iri, String>,
    top_n: usize,
) -> BTreeMap<usize, Vec<Keyword>> {
    let leaf_weights = ctfidf_weights(tree, documents);
    let mut out = BTreeMap::new();
    for topic in tree.topics.values() {
        let mut summed: BTreeMap<String, f64> = BTreeMap::new();
        let mut stack = vec![topic.id];
        while let Some(id) = stack.pop() {
            let t = &tree.topics[&id];
            if t.is_leaf() {
                for (term, w) in leaf_weights.get(&id).into_iter().flatten() {
                    *summed.entry(term.clone()).or_default() += w;
                }
            } else {
                stack.extend(&t.children);
            }
        }
        out.insert(topic.id, top_terms(&summed, top_n));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LabelError {
    #[error("labeling provider transport error: {0}")]
    Transport(String),
    #[error("labeling provider timed out")]
    Timeout,
    #[error("labeling provider returned an unusable response: {0}")]
    InvalidResponse(String),
}

/// Produces a short human-readable topic label.
pub trait Labeler: Send + Sync {
    fn label(&self, keywords: &[String], examples: &[String]) -> Result<String, LabelError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OfflineLabeler;

impl Labeler for OfflineLabeler {
    fn label(&self, keywords: &[String], examples: &[String]) -> Result<String, LabelError> {
        Ok(offline_label(keywords, examples))
    }
}

/// Top three keywords joined by ", " with the first letter capitalized.
pub fn offline_label(keywords: &[String], examples: &[String]) -> String {
    let source = if keywords.is_empty() { examples } else { keywords };
    let joined = source.iter().take(3).cloned().collect::<Vec<_>>().join(", ");
    let mut chars = joined.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => "Untitled topic".to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LabelFallback {
    pub topic_id: usize,
    pub error: String,
}

fn clean_label(raw: &str) -> Option<String> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return None;
    }
    Some(trimmed.chars().take(MAX_LABEL_CHARS).collect::<String>().trim_end().to_string())
}

/// Labels every topic; failed topics get the offline label and are reported.
pub fn label_topics(
    tree: &mut TopicTree,
    labeler: &dyn Labeler,
    ontology: &OntologyModel,
    exec: Exec,
) -> Vec<LabelFallback> {
    let requests: Vec<(usize, Vec<String>, Vec<String>)> = tree
        .topics
        .values()
        .map(|t| {
            let keywords = t.keywords.iter().take(10).map(|k| k.term.clone()).collect();
            let examples = t.member_classes.iter().take(3).map(|c| ontology.class_label(c)).collect();
            (t.id, keywords, examples)
        })
        .collect();
    let results = exec.map(&requests, |(_, keywords, examples)| {
        labeler
            .label(keywords, examples)
            .and_then(|l| clean_label(&l).ok_or_else(|| LabelError::InvalidResponse("empty label".into())))
    });
    let mut fallbacks = Vec::new();
    for ((id, keywords, examples), result) in requests.into_iter().zip(results) {
        let label = match result {
            Ok(label) => label,
            Err(e) => {
                fallbacks.push(LabelFallback {
                    topic_id: id,
                    error: e.to_string(),
                });
                offline_label(&keywords, &examples)
            }
        };
        tree.topics.get_mut(&id).expect("topic").label = label;
    }
    fallbacks
}

#[derive(Debug, Clone)]
pub struct TopicBuild {
    pub tree: TopicTree,
    pub documents: BTreeMap<Iri, ClassDocument>,
    pub class_vectors: BTreeMap<Iri, EmbeddingVector>,
    pub fallbacks: Vec<LabelFallback>,
}

/// Documents, embeddings, clustering, keywords and labels in one pass.
pub fn build_topics(
    ontology: &OntologyModel,
    embedder: &dyn Embedder,
    labeler: &dyn Labeler,
    leaf_count: Option<usize>,
    top_n: usize,
    exec: Exec,
) -> Result<TopicBuild, EmbedError> {
    let classes: Vec<&OntologyClass> = ontology.classes().collect();
    let documents: BTreeMap<Iri, ClassDocument> = exec
        .map(&classes, |c| class_document(c, ontology))
        .into_iter()
        .map(|d| (d.class_iri.clone(), d))
        .collect();
    let texts: Vec<String> = documents.values().map(|d| d.text.clone()).collect();
    let vectors = embedder.embed_batch(&texts)?;
    let class_vectors: BTreeMap<Iri, EmbeddingVector> = documents.keys().cloned().zip(vectors).collect();
    let k = leaf_count.unwrap_or_else(|| default_leaf_count(classes.len()));
    let mut tree = cluster_classes(&class_vectors, k, exec);
    let doc_texts: BTreeMap<Iri, String> = documents.iter().map(|(k, d)| (k.clone(), d.text.clone())).collect();
    for (id, keywords) in ctfidf_keywords(&tree, &doc_texts, top_n) {
        tree.topics.get_mut(&id).expect("topic").keywords = keywords;
    }
    let fallbacks = label_topics(&mut tree, labeler, ontology, exec);
    Ok(TopicBuild {
        tree,
        documents,
        class_vectors,
        fallbacks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::build_ontology;
    use crate::rdf::{parse_str, RdfFormat};
    use approx::assert_abs_diff_eq;

    fn iri(s: &str) -> Iri {
        Iri::new(format!("http://ex.org/{s}")).unwrap()
    }

    fn ontology() -> OntologyModel {
        let doc = r#"
            @prefix ex: <http://ex.org/> .
            @prefix owl: <http://www.w3.org/2002/07/owl#> .
            @prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
            ex:Ship a owl:Class . ex:Person a owl:Class . ex:Club a owl:Class .
            ex:Athlete a owl:Class ; rdfs:subClassOf ex:Person .
            ex:team a owl:ObjectProperty ; rdfs:domain ex:Athlete ; rdfs:range ex:Club .
        "#;
        build_ontology(&parse_str(doc, RdfFormat::Turtle).unwrap()).unwrap()
    }

    #[test]
    fn stopwords_cover_template_words() {
        let unique: BTreeSet<&str> = STOPWORDS.iter().copied().collect();
        assert_eq!(unique.len(), 50);
        for w in ["class", "parents", "properties", "none", "any"] {
            assert!(unique.contains(w));
        }
    }

    #[test]
    fn documents() {
        let o = ontology();
        let ship = class_document(o.class(&iri("Ship")).unwrap(), &o);
        assert_eq!(ship.text, "Class: Ship. Parents: none. Properties: none.");
        let athlete = class_document(o.class(&iri("Athlete")).unwrap(), &o);
        assert_eq!(athlete.text, "Class: Athlete. Parents: Person. Properties: team (Club).");
    }

    fn unit(v: Vec<f64>) -> EmbeddingVector {
        EmbeddingVector::normalized(v)
    }

    #[test]
    fn single_class() {
        let vectors = BTreeMap::from([(iri("a"), unit(vec![1.0, 0.0]))]);
        let tree = cluster_classes(&vectors, 2, Exec::Sequential);
        assert_eq!(tree.topics.len(), 1);
        assert_eq!(tree.roots, BTreeSet::from([0]));
        assert!(tree.topics[&0].parent_topic_id.is_none());
    }

    #[test]
    fn bundles_stay_together() {
        let vectors = BTreeMap::from([
            (iri("a"), unit(vec![1.0, 0.05])),
            (iri("b"), unit(vec![0.0, 1.0])),
            (iri("c"), unit(vec![1.0, -0.05])),
            (iri("d"), unit(vec![0.05, 1.0])),
        ]);
        let tree = cluster_classes(&vectors, 2, Exec::Sequential);
        let leaves: Vec<&BTreeSet<Iri>> = tree.leaves().map(|t| &t.member_classes).collect();
        assert_eq!(leaves, vec![&BTreeSet::from([iri("a"), iri("c")]), &BTreeSet::from([iri("b"), iri("d")])]);
        assert_eq!(tree.topics.len(), 3);
        assert_eq!(tree.roots, BTreeSet::from([2]));
        assert_eq!(tree.topics[&2].member_classes.len(), 4);
        assert_eq!(tree.topics[&2].children, vec![0, 1]);
    }

    #[test]
    fn degenerate_k_gives_singletons() {
        let vectors: BTreeMap<Iri, EmbeddingVector> = (0..5)
            .map(|i| (iri(&format!("c{i}")), unit(vec![i as f64, 1.0, 0.5])))
            .collect();
        let tree = cluster_classes(&vectors, 5, Exec::Parallel);
        assert_eq!(tree.leaves().count(), 5);
        assert!(tree.leaves().all(|t| t.member_classes.len() == 1));
        assert_eq!(tree.roots.len(), 1);
        assert_eq!(tree.topics.len(), 9);
        assert_eq!(cluster_classes(&vectors, 5, Exec::Sequential), tree);
    }

    #[test]
    fn ctfidf_hand_example() {
        let mut tree = TopicTree::default();
        for (id, member) in [(0, "x"), (1, "y")] {
            tree.topics.insert(
                id,
                Topic {
                    id,
                    label: String::new(),
                    keywords: vec![],
                    member_classes: BTreeSet::from([iri(member)]),
                    parent_topic_id: None,
                    children: vec![],
                    centroid: EmbeddingVector::zeros(2),
                },
            );
        }
        let docs = BTreeMap::from([(iri("x"), "ship ship port".to_string()), (iri("y"), "person".to_string())]);
        let w = ctfidf_weights(&tree, &docs);
        assert_abs_diff_eq!(w[&0]["ship"], 2.0 * 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(w[&0]["ship"], 1.38629, epsilon = 1e-5);
        let kw = ctfidf_keywords(&tree, &docs, 10);
        assert_eq!(kw[&0][0].term, "ship");

        let docs = BTreeMap::from([(iri("x"), "shared alpha".to_string()), (iri("y"), "shared beta".to_string())]);
        let w = ctfidf_weights(&tree, &docs);
        assert!(w[&0]["shared"] < w[&0]["alpha"]);

        let empty = ctfidf_keywords(&tree, &BTreeMap::new(), 10);
        assert!(empty[&0].is_empty());
    }

    #[test]
    fn offline_labels() {
        let kw: Vec<String> = ["athlete", "club", "team", "extra"].iter().map(|s| s.to_string()).collect();
        assert_eq!(offline_label(&kw, &[]), "Athlete, club, team");
        assert_eq!(offline_label(&[], &["Ship".to_string()]), "Ship");
        assert_eq!(offline_label(&[], &[]), "Untitled topic");
    }

    struct Fixed(Result<String, LabelError>);

    impl Labeler for Fixed {
        fn label(&self, _: &[String], _: &[String]) -> Result<String, LabelError> {
            self.0.clone()
        }
    }

    #[test]
    fn labeling_with_provider() {
        let o = ontology();
        let embedder = crate::embed::OfflineEmbedder::new(64);
        let good = Fixed(Ok("Athlete rankings and achievements".into()));
        let built = build_topics(&o, &embedder, &good, None, 10, Exec::Sequential).unwrap();
        assert!(built.fallbacks.is_empty());
        assert!(built.tree.topics.values().all(|t| t.label == "Athlete rankings and achievements"));

        let bad = Fixed(Err(LabelError::Timeout));
        let built = build_topics(&o, &embedder, &bad, None, 10, Exec::Sequential).unwrap();
        assert_eq!(built.fallbacks.len(), built.tree.topics.len());
        for t in built.tree.topics.values() {
            let kws: Vec<String> = t.keywords.iter().map(|k| k.term.clone()).collect();
            assert_eq!(t.label, offline_label(&kws, &[]));
            assert!(!t.label.is_empty());
        }

        let long = Fixed(Ok("x".repeat(80)));
        let built = build_topics(&o, &embedder, &long, None, 10, Exec::Sequential).unwrap();
        assert!(built.tree.topics.values().all(|t| t.label.chars().count() == MAX_LABEL_CHARS));
        let blank = Fixed(Ok("   ".into()));
        let built = build_topics(&o, &embedder, &blank, None, 10, Exec::Sequential).unwrap();
        assert_eq!(built.fallbacks.len(), built.tree.topics.len());
    }

    #[test]
    fn leaf_partition_and_centroids() {
        let o = ontology();
        let embedder = crate::embed::OfflineEmbedder::new(64);
        let built = build_topics(&o, &embedder, &OfflineLabeler, None, 10, Exec::Parallel).unwrap();
        let mut seen = BTreeSet::new();
        for leaf in built.tree.leaves() {
            for m in &leaf.member_classes {
                assert!(seen.insert(m.clone()));
            }
        }
        assert_eq!(seen.len(), o.class_count());
        for t in built.tree.topics.values() {
            let n = t.centroid.norm();
            assert!(n == 0.0 || (n - 1.0).abs() < 1e-9);
        }
        assert_eq!(built.tree.leaves().count(), default_leaf_count(o.class_count()));
    }
}
