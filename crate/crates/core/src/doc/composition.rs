use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::Diagnostic;
use crate::names::normalize;

use super::tagger::relation;
use super::TaggedSentence;

pub const SYNTHETIC_ROOT: &str = "system";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Sentence(usize),
    Edit(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentNode {
    pub name: String,
    pub children: Vec<ComponentNode>,
    pub provenance: Vec<Provenance>,
}

impl ComponentNode {
    pub fn leaf(name: impl Into<String>) -> Self {
        ComponentNode {
            name: name.into(),
            children: Vec::new(),
            provenance: Vec::new(),
        }
    }

    pub fn key(&self) -> String {
        normalize(&self.name)
    }

    pub fn child(&self, name: &str) -> Option<&ComponentNode> {
        let key = normalize(name);
        self.children.iter().find(|c| c.key() == key)
    }

    /// Node addressed by `/`-separated names, starting with this node's.
    pub fn find(&self, path: &str) -> Option<&ComponentNode> {
        let mut parts = path.split('/');
        if normalize(parts.next()?) != self.key() {
            return None;
        }
        parts.try_fold(self, |n, p| n.child(p))
    }

    fn find_mut(&mut self, path: &str) -> Option<&mut ComponentNode> {
        let mut parts = path.split('/');
        if normalize(parts.next()?) != self.key() {
            return None;
        }
        parts.try_fold(self, |n, p| {
            let key = normalize(p);
            n.children.iter_mut().find(|c| c.key() == key)
        })
    }

    /// Pre-order walk.
    pub fn walk(&self) -> Vec<&ComponentNode> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.walk());
        }
        out
    }

    /// Nodes with children (couples), pre-order.
    pub fn composites(&self) -> Vec<&ComponentNode> {
        self.walk().into_iter().filter(|n| !n.children.is_empty()).collect()
    }

    fn sort(&mut self) {
        self.children.sort_by_key(|c| c.key());
        self.provenance.sort();
        self.provenance.dedup();
        for c in &mut self.children {
            c.sort();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemComposition {
    pub root: ComponentNode,
    #[serde(default)]
    pub diagnostics: Vec<Diagnostic>,
}

impl SystemComposition {
    /// Every component name except a synthetic root.
    pub fn component_names(&self) -> Vec<String> {
        self.root
            .walk()
            .into_iter()
            .filter(|n| !(n.name == SYNTHETIC_ROOT && n.provenance.is_empty()))
            .map(|n| n.name.clone())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("composition serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompositionError {
    #[error("containment cycle: {}", path.join(" -> "))]
    CycleDetected { path: Vec<String> },
    #[error("no containment relations found")]
    NoRelations,
    #[error("edit {index}: no component at `{path}`")]
    PathNotFound { index: usize, path: String },
    #[error("edit {index}: `{parent}` already has a child named `{name}`")]
    DuplicateChild { index: usize, parent: String, name: String },
    #[error("edit {index}: `{parent}` has no child named `{name}`")]
    NoSuchChild { index: usize, parent: String, name: String },
    #[error("edit {index}: empty name")]
    EmptyName { index: usize },
}

impl CompositionError {
    pub fn code(&self) -> &'static str {
        match self {
            CompositionError::CycleDetected { .. } => "CycleDetected",
            CompositionError::NoRelations => "NoRelations",
            CompositionError::PathNotFound { .. } => "PathNotFound",
            CompositionError::DuplicateChild { .. } => "DuplicateChild",
            CompositionError::NoSuchChild { .. } => "NoSuchChild",
            CompositionError::EmptyName { .. } => "EmptyName",
        }
    }
}

#[derive(Default)]
struct Graph {
    surface: BTreeMap<String, BTreeSet<String>>,
    children: BTreeMap<String, BTreeSet<String>>,
    provenance: BTreeMap<String, BTreeSet<usize>>,
}

impl Graph {
    fn note(&mut self, name: &str, sentence: usize) -> String {
        let key = normalize(name);
        self.surface.entry(key.clone()).or_default().insert(name.trim().to_string());
        self.provenance.entry(key.clone()).or_default().insert(sentence);
        key
    }

    fn display(&self, key: &str) -> String {
        self.surface[key].iter().next().cloned().unwrap_or_else(|| key.to_string())
    }

    fn find_cycle(&self) -> Option<Vec<String>> {
        // 0 unvisited, 1 on stack, 2 done
        fn dfs(g: &Graph, k: &str, state: &mut BTreeMap<String, u8>, stack: &mut Vec<String>) -> Option<Vec<String>> {
            state.insert(k.to_string(), 1);
            stack.push(k.to_string());
            for c in g.children.get(k).into_iter().flatten() {
                match state.get(c).copied().unwrap_or(0) {
                    1 => {
                        let from = stack.iter().position(|s| s == c).expect("on stack");
                        let mut path: Vec<String> = stack[from..].iter().map(|s| g.display(s)).collect();
                        path.push(g.display(c));
                        return Some(path);
                    }
                    0 => {
                        if let Some(p) = dfs(g, c, state, stack) {
                            return Some(p);
                        }
                    }
                    _ => {}
                }
            }
            stack.pop();
            state.insert(k.to_string(), 2);
            None
        }
        let mut state = BTreeMap::new();
        for k in self.surface.keys() {
            if state.get(k).copied().unwrap_or(0) == 0 {
                if let Some(p) = dfs(self, k, &mut state, &mut Vec::new()) {
                    return Some(p);
                }
            }
        }
        None
    }

    fn node(&self, key: &str) -> ComponentNode {
        let mut children: Vec<ComponentNode> = self.children.get(key).into_iter().flatten().map(|c| self.node(c)).collect();
        children.sort_by_key(|c| c.key());
        ComponentNode {
            name: self.display(key),
            children,
            provenance: self.provenance[key].iter().map(|&i| Provenance::Sentence(i)).collect(),
        }
    }
}

/// Aggregates the containment relations stated by tagged sentences into one
/// tree. Names merge case- and whitespace-insensitively; the result does not
/// depend on sentence order.
pub fn build_composition(tagged: &[TaggedSentence]) -> Result<SystemComposition, CompositionError> {
    let mut g = Graph::default();
    for s in tagged {
        let Some((parent, children)) = relation(s) else { continue };
        let p = g.note(&parent, s.id);
        for c in children {
            let c = g.note(&c, s.id);
            g.children.entry(p.clone()).or_default().insert(c);
        }
    }
    if g.surface.is_empty() {
        return Err(CompositionError::NoRelations);
    }
    if let Some(path) = g.find_cycle() {
        return Err(CompositionError::CycleDetected { path });
    }
    let contained: BTreeSet<&String> = g.children.values().flatten().collect();
    let roots: Vec<&String> = g.surface.keys().filter(|k| !contained.contains(k)).collect();
    let mut diagnostics = Vec::new();
    let root = if roots.len() == 1 {
        g.node(roots[0])
    } else {
        let names: Vec<String> = roots.iter().map(|k| g.display(k)).collect();
        diagnostics.push(Diagnostic::warning(
            "MultipleRoots",
            format!("{} top-level systems ({}); joined under `{SYNTHETIC_ROOT}`", names.len(), names.join(", ")),
        ));
        let mut root = ComponentNode::leaf(SYNTHETIC_ROOT);
        root.children = roots.iter().map(|k| g.node(k)).collect();
        root.sort();
        root
    };
    Ok(SystemComposition { root, diagnostics })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditOp {
    /// Adds `name` as a child of `path`.
    Add,
    /// Removes child `name` of `path`.
    Remove,
    /// Renames the node at `path` to `name`.
    Rename,
}

/// One manual correction. `path` is `/`-separated component names from the
/// root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub op: EditOp,
    pub path: String,
    pub name: String,
}

/// Applies edits in order. Touched nodes record the edit's index.
pub fn apply_edits(composition: &SystemComposition, edits: &[Edit]) -> Result<SystemComposition, CompositionError> {
    let mut out = composition.clone();
    for (index, e) in edits.iter().enumerate() {
        let name = e.name.trim();
        if name.is_empty() {
            return Err(CompositionError::EmptyName { index });
        }
        let not_found = || CompositionError::PathNotFound {
            index,
            path: e.path.clone(),
        };
        match e.op {
            EditOp::Add => {
                let parent = out.root.find_mut(&e.path).ok_or_else(not_found)?;
                if parent.child(name).is_some() {
                    return Err(CompositionError::DuplicateChild {
                        index,
                        parent: parent.name.clone(),
                        name: name.into(),
                    });
                }
                let mut node = ComponentNode::leaf(name);
                node.provenance.push(Provenance::Edit(index));
                parent.children.push(node);
                parent.provenance.push(Provenance::Edit(index));
            }
            EditOp::Remove => {
                let parent = out.root.find_mut(&e.path).ok_or_else(not_found)?;
                let key = normalize(name);
                let before = parent.children.len();
                parent.children.retain(|c| c.key() != key);
                if parent.children.len() == before {
                    return Err(CompositionError::NoSuchChild {
                        index,
                        parent: parent.name.clone(),
                        name: name.into(),
                    });
                }
                parent.provenance.push(Provenance::Edit(index));
            }
            EditOp::Rename => {
                let (parent_path, _) = e.path.rsplit_once('/').unwrap_or(("", &e.path));
                if !parent_path.is_empty() {
                    let parent = out.root.find(parent_path).ok_or_else(not_found)?;
                    let target = out.root.find(&e.path).ok_or_else(not_found)?;
                    if normalize(name) != target.key() && parent.child(name).is_some() {
                        return Err(CompositionError::DuplicateChild {
                            index,
                            parent: parent.name.clone(),
                            name: name.into(),
                        });
                    }
                }
                let node = out.root.find_mut(&e.path).ok_or_else(not_found)?;
                node.name = name.into();
                node.provenance.push(Provenance::Edit(index));
            }
        }
    }
    out.root.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doc::{split_sentences, RuleTagger};

    fn compose(doc: &str) -> Result<SystemComposition, CompositionError> {
        let ss = split_sentences(doc, &[]);
        let tagged: Vec<_> = ss.iter().map(|s| RuleTagger.tag_one(s)).collect();
        build_composition(&tagged)
    }

    fn names(n: &ComponentNode) -> Vec<&str> {
        n.children.iter().map(|c| c.name.as_str()).collect()
    }

    #[test]
    fn merges_normalized_names() {
        let c = compose("A contains B. a  contains C.").unwrap();
        assert_eq!(c.root.name, "A");
        assert_eq!(names(&c.root), ["B", "C"]);
        assert_eq!(c.root.provenance, [Provenance::Sentence(0), Provenance::Sentence(1)]);
    }

    #[test]
    fn cycles_are_rejected() {
        match compose("A contains B. B contains A.") {
            Err(CompositionError::CycleDetected { path }) => assert_eq!(path.first(), path.last()),
            other => panic!("{other:?}"),
        }
        assert!(matches!(compose("A contains A."), Err(CompositionError::CycleDetected { .. })));
    }

    #[test]
    fn no_relations() {
        assert_eq!(compose("The sky is blue."), Err(CompositionError::NoRelations));
    }

    #[test]
    fn nested_and_multiple_roots() {
        let c = compose("A contains B. B contains C. D contains E.").unwrap();
        assert_eq!(c.root.name, SYNTHETIC_ROOT);
        assert_eq!(names(&c.root), ["A", "D"]);
        assert_eq!(c.root.find("system/A/B/C").unwrap().name, "C");
        assert_eq!(c.diagnostics[0].code, "MultipleRoots");
        assert_eq!(c.component_names(), ["A", "B", "C", "D", "E"]);
    }

    #[test]
    fn order_independent() {
        let a = compose("A contains B. B contains C, D. A contains E.").unwrap();
        let b = compose("A contains E. B contains D, C. A contains B.").unwrap();
        assert_eq!(a.root.name, b.root.name);
        let shape = |n: &ComponentNode| n.walk().iter().map(|x| x.name.clone()).collect::<Vec<_>>();
        assert_eq!(shape(&a.root), shape(&b.root));
    }

    #[test]
    fn edits() {
        let c = compose("Plant contains pump, valve.").unwrap();
        let edits = vec![
            Edit { op: EditOp::Add, path: "Plant".into(), name: "tank".into() },
            Edit { op: EditOp::Remove, path: "plant".into(), name: "Valve".into() },
            Edit { op: EditOp::Rename, path: "Plant/pump".into(), name: "Pump".into() },
        ];
        let e = apply_edits(&c, &edits).unwrap();
        assert_eq!(names(&e.root), ["Pump", "tank"]);
        assert!(e.root.child("tank").unwrap().provenance.contains(&Provenance::Edit(0)));

        let dup = [Edit { op: EditOp::Add, path: "Plant".into(), name: "PUMP".into() }];
        assert!(matches!(apply_edits(&c, &dup), Err(CompositionError::DuplicateChild { .. })));
        let missing = [Edit { op: EditOp::Add, path: "Plant/nothing".into(), name: "x".into() }];
        assert!(matches!(apply_edits(&c, &missing), Err(CompositionError::PathNotFound { .. })));
        let clash = [Edit { op: EditOp::Rename, path: "Plant/pump".into(), name: "valve".into() }];
        assert!(matches!(apply_edits(&c, &clash), Err(CompositionError::DuplicateChild { .. })));
    }

    #[test]
    fn edit_file_format() {
        let edits: Vec<Edit> = serde_json::from_str(r#"[{"op":"rename","path":"a/b","name":"B"}]"#).unwrap();
        assert_eq!(edits[0].op, EditOp::Rename);
    }
}
