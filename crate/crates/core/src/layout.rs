//! Circle packing of the class hierarchy ("minimap") and the highlight of a
//! prototype graph's classes on it.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::ontology::OntologyModel;
use crate::proto::PrototypeGraph;
use crate::rdf::vocab::owl;
use crate::rdf::Iri;

pub const PADDING: f64 = 1.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PackedCircle {
    pub class_iri: Iri,
    pub center: [f64; 2],
    pub radius: f64,
    pub depth: usize,
    pub parent: Option<Iri>,
}

/// Circles sorted by class IRI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MinimapLayout {
    pub circles: Vec<PackedCircle>,
    pub root_iri: Option<Iri>,
}

impl MinimapLayout {
    pub fn get(&self, iri: &Iri) -> Option<&PackedCircle> {
        self.circles
            .binary_search_by(|c| c.class_iri.cmp(iri))
            .ok()
            .map(|i| &self.circles[i])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LayoutError {
    #[error("class <{0}> is not in the layout")]
    UnknownClass(Iri),
}

#[derive(Debug, Clone, Copy)]
struct Circle {
    x: f64,
    y: f64,
    r: f64,
}

/// Linear congruential generator with the constants used by d3-hierarchy.
struct Lcg(u64);

impl Lcg {
    fn new() -> Self {
        Lcg(1)
    }

    fn next(&mut self) -> f64 {
        self.0 = (1664525 * self.0 + 1013904223) % 4294967296;
        self.0 as f64 / 4294967296.0
    }
}

fn place(b: Circle, a: Circle, c: &mut Circle) {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let d2 = dx * dx + dy * dy;
    if d2 != 0.0 {
        let a2 = (a.r + c.r) * (a.r + c.r);
        let b2 = (b.r + c.r) * (b.r + c.r);
        if a2 > b2 {
            let x = (d2 + b2 - a2) / (2.0 * d2);
            let y = (b2 / d2 - x * x).max(0.0).sqrt();
            c.x = b.x - x * dx - y * dy;
            c.y = b.y - x * dy + y * dx;
        } else {
            let x = (d2 + a2 - b2) / (2.0 * d2);
            let y = (a2 / d2 - x * x).max(0.0).sqrt();
            c.x = a.x + x * dx - y * dy;
            c.y = a.y + x * dy + y * dx;
        }
    } else {
        c.x = a.x + c.r;
        c.y = a.y;
    }
}

fn intersects(a: Circle, b: Circle) -> bool {
    let dr = a.r + b.r - 1e-6;
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    dr > 0.0 && dr * dr > dx * dx + dy * dy
}

/// Places circles (in order) tangent to each other around the origin and
/// returns the enclosing circle's radius; circles end up centred on it.
fn pack_siblings(circles: &mut [Circle]) -> f64 {
    let n = circles.len();
    if n == 0 {
        return 0.0;
    }
    circles[0].x = 0.0;
    circles[0].y = 0.0;
    if n == 1 {
        return circles[0].r;
    }
    circles[0].x = -circles[1].r;
    circles[1].x = circles[0].r;
    circles[1].y = 0.0;
    if n == 2 {
        return circles[0].r + circles[1].r;
    }
    let (c0, c1) = (circles[0], circles[1]);
    place(c1, c0, &mut circles[2]);

    // front chain as a doubly linked ring over circle indices
    let mut next = vec![usize::MAX; n];
    let mut prev = vec![usize::MAX; n];
    let (mut a, mut b, mut c) = (0usize, 1usize, 2usize);
    next[a] = b;
    prev[c] = b;
    next[b] = c;
    prev[a] = c;
    next[c] = a;
    prev[b] = a;

    let score = |circles: &[Circle], next: &[usize], node: usize| {
        let a = circles[node];
        let b = circles[next[node]];
        let ab = a.r + b.r;
        let dx = (a.x * b.r + b.x * a.r) / ab;
        let dy = (a.y * b.r + b.y * a.r) / ab;
        dx * dx + dy * dy
    };

    let mut i = 3;
    'pack: while i < n {
        let (ca, cb) = (circles[a], circles[b]);
        place(ca, cb, &mut circles[i]);
        c = i;
        let mut j = next[b];
        let mut k = prev[a];
        let mut sj = circles[b].r;
        let mut sk = circles[a].r;
        loop {
            if sj <= sk {
                if intersects(circles[j], circles[c]) {
                    b = j;
                    next[a] = b;
                    prev[b] = a;
                    continue 'pack;
                }
                sj += circles[j].r;
                j = next[j];
            } else {
                if intersects(circles[k], circles[c]) {
                    a = k;
                    next[a] = b;
                    prev[b] = a;
                    continue 'pack;
                }
                sk += circles[k].r;
                k = prev[k];
            }
            if j == next[k] {
                break;
            }
        }
        prev[c] = a;
        next[c] = b;
        next[a] = c;
        prev[b] = c;
        b = c;

        let mut best = a;
        let mut best_score = score(circles, &next, a);
        let mut node = next[c];
        while node != b {
            let s = score(circles, &next, node);
            if s < best_score {
                best = node;
                best_score = s;
            }
            node = next[node];
        }
        a = best;
        b = next[a];
        i += 1;
    }

    let mut chain = vec![circles[b]];
    let mut node = next[b];
    while node != b {
        chain.push(circles[node]);
        node = next[node];
    }
    let e = enclose(chain, &mut Lcg::new());
    for circle in circles.iter_mut() {
        circle.x -= e.x;
        circle.y -= e.y;
    }
    e.r
}

fn shuffle(items: &mut [Circle], rng: &mut Lcg) {
    let mut m = items.len();
    while m > 0 {
        let i = (rng.next() * m as f64) as usize;
        m -= 1;
        items.swap(m, i);
    }
}

/// Smallest circle enclosing all `circles` (randomized incremental method).
fn enclose(mut circles: Vec<Circle>, rng: &mut Lcg) -> Circle {
    shuffle(&mut circles, rng);
    let n = circles.len();
    let mut basis: Vec<Circle> = Vec::new();
    let mut e: Option<Circle> = None;
    let mut i = 0;
    while i < n {
        let p = circles[i];
        if e.is_some_and(|e| encloses_weak(e, p)) {
            i += 1;
        } else {
            basis = extend_basis(&basis, p);
            e = Some(enclose_basis(&basis));
            i = 0;
        }
    }
    e.expect("at least one circle")
}

fn extend_basis(basis: &[Circle], p: Circle) -> Vec<Circle> {
    if encloses_weak_all(p, basis) {
        return vec![p];
    }
    for &b in basis {
        if encloses_not(p, b) && encloses_weak_all(enclose2(b, p), basis) {
            return vec![b, p];
        }
    }
    for i in 0..basis.len().saturating_sub(1) {
        for j in (i + 1)..basis.len() {
            let (bi, bj) = (basis[i], basis[j]);
            if encloses_not(enclose2(bi, bj), p)
                && encloses_not(enclose2(bi, p), bj)
                && encloses_not(enclose2(bj, p), bi)
                && encloses_weak_all(enclose3(bi, bj, p), basis)
            {
                return vec![bi, bj, p];
            }
        }
    }
    // numerically degenerate input; the circle itself is the safest basis
    vec![p]
}

fn encloses_not(a: Circle, b: Circle) -> bool {
    let dr = a.r - b.r;
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    dr < 0.0 || dr * dr < dx * dx + dy * dy
}

fn encloses_weak(a: Circle, b: Circle) -> bool {
    let dr = a.r - b.r + a.r.max(b.r).max(1.0) * 1e-9;
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    dr > 0.0 && dr * dr > dx * dx + dy * dy
}

fn encloses_weak_all(a: Circle, basis: &[Circle]) -> bool {
    basis.iter().all(|&b| encloses_weak(a, b))
}

fn enclose_basis(basis: &[Circle]) -> Circle {
    match basis {
        [a] => *a,
        [a, b] => enclose2(*a, *b),
        [a, b, c] => enclose3(*a, *b, *c),
        _ => unreachable!("basis has one to three circles"),
    }
}

fn enclose2(a: Circle, b: Circle) -> Circle {
    let x21 = b.x - a.x;
    let y21 = b.y - a.y;
    let r21 = b.r - a.r;
    let l = (x21 * x21 + y21 * y21).sqrt();
    Circle {
        x: (a.x + b.x + x21 / l * r21) / 2.0,
        y: (a.y + b.y + y21 / l * r21) / 2.0,
        r: (l + a.r + b.r) / 2.0,
    }
}

fn enclose3(a: Circle, b: Circle, c: Circle) -> Circle {
    let (x1, y1, r1) = (a.x, a.y, a.r);
    let (x2, y2, r2) = (b.x, b.y, b.r);
    let (x3, y3, r3) = (c.x, c.y, c.r);
    let a2 = x1 - x2;
    let a3 = x1 - x3;
    let b2 = y1 - y2;
    let b3 = y1 - y3;
    let c2 = r2 - r1;
    let c3 = r3 - r1;
    let d1 = x1 * x1 + y1 * y1 - r1 * r1;
    let d2 = d1 - x2 * x2 - y2 * y2 + r2 * r2;
    let d3 = d1 - x3 * x3 - y3 * y3 + r3 * r3;
    let ab = a3 * b2 - a2 * b3;
    let xa = (b2 * d3 - b3 * d2) / (ab * 2.0) - x1;
    let xb = (b3 * c2 - b2 * c3) / ab;
    let ya = (a3 * d2 - a2 * d3) / (ab * 2.0) - y1;
    let yb = (a2 * c3 - a3 * c2) / ab;
    let qa = xb * xb + yb * yb - 1.0;
    let qb = 2.0 * (r1 + xa * xb + ya * yb);
    let qc = xa * xa + ya * ya - r1 * r1;
    let r = -(if qa.abs() > 1e-6 {
        (qb + (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa)
    } else {
        qc / qb
    });
    Circle {
        x: x1 + xa + xb * r,
        y: y1 + ya + yb * r,
        r,
    }
}

/// Packs the class hierarchy. Multi-parent classes go under their smallest
/// parent IRI; several roots are joined under a virtual top-class circle.
pub fn pack_hierarchy(ontology: &OntologyModel) -> MinimapLayout {
    let mut children: BTreeMap<Iri, Vec<Iri>> = BTreeMap::new();
    let mut roots = Vec::new();
    for class in ontology.classes() {
        match class.parents.iter().find(|p| ontology.class(p).is_some()) {
            Some(parent) => children.entry(parent.clone()).or_default().push(class.iri.clone()),
            None => roots.push(class.iri.clone()),
        }
    }
    let root = match roots.len() {
        0 => {
            return MinimapLayout {
                circles: Vec::new(),
                root_iri: None,
            }
        }
        1 => roots.pop().expect("one root"),
        _ => {
            let top = owl::thing();
            children.insert(top.clone(), roots);
            top
        }
    };

    // breadth-first order; reversed, it visits children before parents
    let mut order = Vec::new();
    let mut depth: BTreeMap<Iri, usize> = BTreeMap::new();
    let mut parent_of: BTreeMap<Iri, Iri> = BTreeMap::new();
    let mut queue = VecDeque::from([root.clone()]);
    depth.insert(root.clone(), 0);
    while let Some(node) = queue.pop_front() {
        for child in children.get(&node).into_iter().flatten() {
            depth.insert(child.clone(), depth[&node] + 1);
            parent_of.insert(child.clone(), node.clone());
            queue.push_back(child.clone());
        }
        order.push(node);
    }

    let mut radius: BTreeMap<Iri, f64> = BTreeMap::new();
    let mut offset: BTreeMap<Iri, (f64, f64)> = BTreeMap::new();
    for node in order.iter().rev() {
        let Some(kids) = children.get(node).filter(|k| !k.is_empty()) else {
            let count = ontology.class(node).map_or(0, |c| c.instance_count);
            radius.insert(node.clone(), (1.0 + count as f64).sqrt());
            continue;
        };
        let mut sorted: Vec<&Iri> = kids.iter().collect();
        sorted.sort_by(|a, b| radius[*b].total_cmp(&radius[*a]).then_with(|| a.cmp(b)));
        let mut circles: Vec<Circle> = sorted
            .iter()
            .map(|k| Circle {
                x: 0.0,
                y: 0.0,
                r: radius[*k],
            })
            .collect();
        let enclosing = pack_siblings(&mut circles);
        for (k, c) in sorted.iter().zip(&circles) {
            offset.insert((*k).clone(), (c.x, c.y));
        }
        radius.insert(node.clone(), enclosing * PADDING);
    }

    let mut center: BTreeMap<Iri, (f64, f64)> = BTreeMap::new();
    let mut circles = Vec::with_capacity(order.len());
    for node in &order {
        let c = match parent_of.get(node) {
            None => (0.0, 0.0),
            Some(p) => {
                let (px, py) = center[p];
                let (ox, oy) = offset[node];
                (px + ox, py + oy)
            }
        };
        center.insert(node.clone(), c);
        circles.push(PackedCircle {
            class_iri: node.clone(),
            center: [c.0, c.1],
            radius: radius[node],
            depth: depth[node],
            parent: parent_of.get(node).cloned(),
        });
    }
    circles.sort_by(|a, b| a.class_iri.cmp(&b.class_iri));
    MinimapLayout {
        circles,
        root_iri: Some(root),
    }
}

/// Circles of the graph's distinct node classes, in IRI order. A top-class
/// node maps to the layout root.
pub fn highlight_classes(layout: &MinimapLayout, graph: &PrototypeGraph) -> Result<Vec<PackedCircle>, LayoutError> {
    let classes: BTreeSet<&Iri> = graph.nodes.iter().map(|n| &n.class_iri).collect();
    let mut out: Vec<PackedCircle> = Vec::new();
    for class in classes {
        let circle = match layout.get(class) {
            Some(c) => c,
            None if OntologyModel::is_top(class) => layout
                .root_iri
                .as_ref()
                .and_then(|r| layout.get(r))
                .ok_or_else(|| LayoutError::UnknownClass(class.clone()))?,
            None => return Err(LayoutError::UnknownClass(class.clone())),
        };
        if !out.iter().any(|c| c.class_iri == circle.class_iri) {
            out.push(circle.clone());
        }
    }
    out.sort_by(|a, b| a.class_iri.cmp(&b.class_iri));
    Ok(out)
}
