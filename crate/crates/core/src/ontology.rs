//! Ontology schema model built from RDF(S)/OWL declarations.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::rdf::vocab::{owl, rdf, rdfs, xsd};
use crate::rdf::{Iri, Term, Triple};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OntologyError {
    #[error("class hierarchy contains a cycle through {}", format_iris(.members))]
    CyclicHierarchy { members: Vec<Iri> },
    #[error("dangling reference from <{from}> to <{to}>")]
    DanglingReference { from: Iri, to: Iri },
}

fn format_iris(iris: &[Iri]) -> String {
    iris.iter().map(|i| format!("<{i}>")).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OntologyClass {
    pub iri: Iri,
    pub label: String,
    pub parents: BTreeSet<Iri>,
    pub instance_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropertyKind {
    Object,
    Datatype,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PropertyDef {
    pub iri: Iri,
    pub label: String,
    pub kind: PropertyKind,
    pub domain: Option<Iri>,
    pub range: Option<Iri>,
    pub prevalence: u64,
}

/// Counts from one ingestion run, emitted as a single JSON line by the CLI.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IngestionReport {
    pub classes: usize,
    pub properties: usize,
    pub triples: usize,
    pub ignored_triples: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyModel {
    classes: BTreeMap<Iri, OntologyClass>,
    properties: BTreeMap<Iri, PropertyDef>,
}

pub fn build_ontology(triples: &[Triple]) -> Result<OntologyModel, OntologyError> {
    build_ontology_with_report(triples).map(|(model, _)| model)
}

fn is_datatype_iri(iri: &Iri) -> bool {
    let s = iri.as_str();
    s.starts_with(xsd::NS) || s == rdfs::LITERAL || s == rdf::LANG_STRING
}

pub fn build_ontology_with_report(triples: &[Triple]) -> Result<(OntologyModel, IngestionReport), OntologyError> {
    let mut class_iris: BTreeSet<Iri> = BTreeSet::new();
    let mut declared_kinds: BTreeMap<Iri, BTreeSet<Option<PropertyKind>>> = BTreeMap::new();
    let mut parents: BTreeMap<Iri, BTreeSet<Iri>> = BTreeMap::new();
    let mut domains: BTreeMap<Iri, BTreeSet<Iri>> = BTreeMap::new();
    let mut ranges: BTreeMap<Iri, BTreeSet<Iri>> = BTreeMap::new();
    let mut labels: HashMap<Iri, Vec<(u8, String)>> = HashMap::new();
    let mut ignored = 0usize;
    let mut pending_labels = Vec::new();

    for t in triples {
        match (t.predicate.as_str(), &t.object) {
            (rdf::TYPE, Term::Iri(o)) => match o.as_str() {
                owl::CLASS | rdfs::CLASS => {
                    class_iris.insert(t.subject.clone());
                }
                owl::OBJECT_PROPERTY => {
                    declared_kinds.entry(t.subject.clone()).or_default().insert(Some(PropertyKind::Object));
                }
                owl::DATATYPE_PROPERTY => {
                    declared_kinds.entry(t.subject.clone()).or_default().insert(Some(PropertyKind::Datatype));
                }
                rdf::PROPERTY => {
                    declared_kinds.entry(t.subject.clone()).or_default().insert(None);
                }
                _ => ignored += 1,
            },
            (rdfs::SUB_CLASS_OF, Term::Iri(o)) => {
                class_iris.insert(t.subject.clone());
                class_iris.insert(o.clone());
                parents.entry(t.subject.clone()).or_default().insert(o.clone());
            }
            (rdfs::DOMAIN, Term::Iri(o)) => {
                declared_kinds.entry(t.subject.clone()).or_default();
                domains.entry(t.subject.clone()).or_default().insert(o.clone());
            }
            (rdfs::RANGE, Term::Iri(o)) => {
                declared_kinds.entry(t.subject.clone()).or_default();
                ranges.entry(t.subject.clone()).or_default().insert(o.clone());
            }
            (rdfs::LABEL, Term::Literal(lit)) => {
                let rank = match lit.language() {
                    None => 0,
                    Some(tag) if tag.eq_ignore_ascii_case("en") || tag.to_ascii_lowercase().starts_with("en-") => 1,
                    Some(_) => 2,
                };
                pending_labels.push((t.subject.clone(), rank, lit.lexical().to_string()));
            }
            _ => ignored += 1,
        }
    }

    // rdfs:domain always names a class; so does the range of an object property
    for dom in domains.values().flatten() {
        if dom.as_str() != owl::THING {
            class_iris.insert(dom.clone());
        }
    }

    let mut properties = BTreeMap::new();
    for (iri, kinds) in &declared_kinds {
        let range = ranges.get(iri).and_then(|r| r.iter().next().cloned());
        let explicit: Vec<PropertyKind> = kinds.iter().flatten().copied().collect();
        let kind = match explicit.as_slice() {
            [k] => *k,
            _ => match &range {
                Some(r) if is_datatype_iri(r) => PropertyKind::Datatype,
                _ => PropertyKind::Object,
            },
        };
        let range = range.filter(|r| r.as_str() != owl::THING && (kind == PropertyKind::Datatype || !is_datatype_iri(r)));
        if kind == PropertyKind::Object {
            if let Some(r) = &range {
                class_iris.insert(r.clone());
            }
        }
        let domain = domains
            .get(iri)
            .and_then(|d| d.iter().find(|d| d.as_str() != owl::THING).cloned());
        properties.insert(
            iri.clone(),
            PropertyDef {
                iri: iri.clone(),
                label: String::new(),
                kind,
                domain,
                range,
                prevalence: 0,
            },
        );
    }
    // an IRI that is both a class and a property keeps its class role only
    properties.retain(|iri, _| !class_iris.contains(iri));

    for (subject, rank, text) in pending_labels {
        if class_iris.contains(&subject) || properties.contains_key(&subject) {
            labels.entry(subject).or_default().push((rank, text));
        } else {
            ignored += 1;
        }
    }
    let mut pick_label = |iri: &Iri| -> String {
        labels
            .get_mut(iri)
            .and_then(|candidates| {
                candidates.sort();
                candidates.first().map(|(_, text)| text.clone())
            })
            .unwrap_or_else(|| iri.local_name().to_string())
    };

    let mut classes = BTreeMap::new();
    for iri in &class_iris {
        classes.insert(
            iri.clone(),
            OntologyClass {
                iri: iri.clone(),
                label: pick_label(iri),
                parents: parents.get(iri).cloned().unwrap_or_default(),
                instance_count: 0,
            },
        );
    }
    for prop in properties.values_mut() {
        prop.label = pick_label(&prop.iri);
    }

    let model = OntologyModel { classes, properties };
    model.check_acyclic()?;
    let report = IngestionReport {
        classes: model.classes.len(),
        properties: model.properties.len(),
        triples: triples.len(),
        ignored_triples: ignored,
    };
    Ok((model, report))
}

impl OntologyModel {
    pub fn new(
        classes: impl IntoIterator<Item = OntologyClass>,
        properties: impl IntoIterator<Item = PropertyDef>,
    ) -> Result<Self, OntologyError> {
        let model = OntologyModel {
            classes: classes.into_iter().map(|c| (c.iri.clone(), c)).collect(),
            properties: properties.into_iter().map(|p| (p.iri.clone(), p)).collect(),
        };
        model.check_integrity()?;
        Ok(model)
    }

    /// Every reference resolves and the hierarchy is a DAG.
    pub fn check_integrity(&self) -> Result<(), OntologyError> {
        for class in self.classes.values() {
            for parent in &class.parents {
                if !self.is_class(parent) {
                    return Err(OntologyError::DanglingReference {
                        from: class.iri.clone(),
                        to: parent.clone(),
                    });
                }
            }
        }
        for prop in self.properties.values() {
            let mut refs: Vec<&Iri> = prop.domain.iter().collect();
            if prop.kind == PropertyKind::Object {
                refs.extend(prop.range.iter());
            }
            for r in refs {
                if !self.is_class(r) {
                    return Err(OntologyError::DanglingReference {
                        from: prop.iri.clone(),
                        to: r.clone(),
                    });
                }
            }
        }
        self.check_acyclic()
    }

    fn check_acyclic(&self) -> Result<(), OntologyError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Active,
            Done,
        }
        let mut marks: HashMap<&Iri, Mark> = HashMap::new();
        for start in self.classes.keys() {
            if marks.contains_key(start) {
                continue;
            }
            // iterative DFS keeping the active path for cycle reporting
            let mut path: Vec<&Iri> = vec![start];
            let mut iters: Vec<std::collections::btree_set::Iter<'_, Iri>> = vec![self.classes[start].parents.iter()];
            marks.insert(start, Mark::Active);
            while let Some(it) = iters.last_mut() {
                match it.next() {
                    Some(parent) => match marks.get(parent) {
                        Some(Mark::Active) => {
                            let pos = path.iter().position(|p| *p == parent).expect("active node on path");
                            let mut members: Vec<Iri> = path[pos..].iter().map(|i| (*i).clone()).collect();
                            members.sort();
                            return Err(OntologyError::CyclicHierarchy { members });
                        }
                        Some(Mark::Done) => {}
                        None => {
                            marks.insert(parent, Mark::Active);
                            path.push(parent);
                            let next = self.classes.get(parent).map(|c| c.parents.iter()).unwrap_or_default();
                            iters.push(next);
                        }
                    },
                    None => {
                        iters.pop();
                        if let Some(done) = path.pop() {
                            marks.insert(done, Mark::Done);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn classes(&self) -> impl Iterator<Item = &OntologyClass> {
        self.classes.values()
    }

    pub fn properties(&self) -> impl Iterator<Item = &PropertyDef> {
        self.properties.values()
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn property_count(&self) -> usize {
        self.properties.len()
    }

    pub fn class(&self, iri: &Iri) -> Option<&OntologyClass> {
        self.classes.get(iri)
    }

    pub fn property(&self, iri: &Iri) -> Option<&PropertyDef> {
        self.properties.get(iri)
    }

    pub fn is_top(iri: &Iri) -> bool {
        iri.as_str() == owl::THING
    }

    /// Declared classes plus the implicit top class.
    pub fn is_class(&self, iri: &Iri) -> bool {
        Self::is_top(iri) || self.classes.contains_key(iri)
    }

    pub fn class_label(&self, iri: &Iri) -> String {
        match self.classes.get(iri) {
            Some(c) => c.label.clone(),
            None => iri.local_name().to_string(),
        }
    }

    /// Strict ancestors, excluding the implicit top class.
    pub fn ancestors(&self, iri: &Iri) -> BTreeSet<Iri> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<&Iri> = self.classes.get(iri).map(|c| c.parents.iter().collect()).unwrap_or_default();
        while let Some(next) = stack.pop() {
            if out.insert(next.clone()) {
                if let Some(c) = self.classes.get(next) {
                    stack.extend(c.parents.iter());
                }
            }
        }
        out
    }

    /// Reflexive subclass test; everything is a subclass of the top class.
    pub fn is_subclass_of(&self, sub: &Iri, sup: &Iri) -> bool {
        Self::is_top(sup) || sub == sup || self.ancestors(sub).contains(sup)
    }

    pub fn children(&self, iri: &Iri) -> Vec<&Iri> {
        self.classes
            .values()
            .filter(|c| c.parents.contains(iri))
            .map(|c| &c.iri)
            .collect()
    }

    /// The class and all its declared subclasses, sorted.
    pub fn descendants_or_self(&self, iri: &Iri) -> BTreeSet<Iri> {
        if Self::is_top(iri) {
            let mut all: BTreeSet<Iri> = self.classes.keys().cloned().collect();
            all.insert(iri.clone());
            return all;
        }
        let mut children: HashMap<&Iri, Vec<&Iri>> = HashMap::new();
        for c in self.classes.values() {
            for p in &c.parents {
                children.entry(p).or_default().push(&c.iri);
            }
        }
        let mut out = BTreeSet::new();
        let mut stack = vec![iri];
        while let Some(next) = stack.pop() {
            if out.insert(next.clone()) {
                stack.extend(children.get(next).into_iter().flatten());
            }
        }
        out
    }

    /// Human-readable label for a property's range: the class label, the
    /// datatype's local name, or `None` when the range is absent.
    pub fn range_label(&self, prop: &PropertyDef) -> Option<String> {
        prop.range.as_ref().map(|r| match prop.kind {
            PropertyKind::Object => self.class_label(r),
            PropertyKind::Datatype => r.local_name().to_string(),
        })
    }

    pub fn set_instance_count(&mut self, class: &Iri, count: u64) {
        if let Some(c) = self.classes.get_mut(class) {
            c.instance_count = count;
        }
    }

    pub fn set_prevalence(&mut self, property: &Iri, count: u64) {
        if let Some(p) = self.properties.get_mut(property) {
            p.prevalence = count;
        }
    }
}
