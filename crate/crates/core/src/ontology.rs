//! Level-stratified domain ontologies.
//!
//! Concepts sit on levels `1..=depth`. Level-1 concepts are leaves and bind
//! exactly one dataset column; every concept at level `l < depth` has a
//! parent at level `l + 1`, and the top-level concepts hang off the implicit
//! root. The on-disk format is line based:
//!
//! ```text
//! # comment
//! concept<TAB>Natural Place<TAB>level=2<TAB>parent=Attraction
//! concept<TAB>Beaches<TAB>level=1<TAB>parent=Natural Place<TAB>column=beaches
//! ```
//!
//! Names and columns may be double-quoted (a literal quote is doubled) to
//! embed tabs. A quoted `"ROOT"` refers to a concept named ROOT rather than
//! the implicit root.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::lineformat::{quote_if_needed, split_fields, Field};

const ROOT: &str = "ROOT";

/// Parent link of a concept.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Parent {
    Root,
    Concept(String),
}

impl fmt::Display for Parent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parent::Root => f.write_str(ROOT),
            Parent::Concept(name) => f.write_str(name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concept {
    pub name: String,
    pub level: usize,
    pub parent: Parent,
    /// Dataset column bound to this concept; present exactly on level 1.
    pub column: Option<String>,
}

impl Concept {
    pub fn is_leaf(&self) -> bool {
        self.level == 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OntologyError {
    #[error("ontology contains no concepts")]
    Empty,
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate name {name:?} (first declared on line {first_line})")]
    DuplicateName {
        name: String,
        line: usize,
        first_line: usize,
    },
    #[error("line {line}: duplicate column binding {column:?} (first bound on line {first_line})")]
    DuplicateColumn {
        column: String,
        line: usize,
        first_line: usize,
    },
    #[error("line {line}: level-1 concept {name:?} has no column binding")]
    LeafWithoutColumn { name: String, line: usize },
    #[error("line {line}: concept {name:?} at level {level} must not bind a column")]
    ColumnOnNonLeaf {
        name: String,
        level: usize,
        line: usize,
    },
    #[error("line {line}: parent {parent:?} of {name:?} is not declared")]
    MissingParent {
        name: String,
        parent: String,
        line: usize,
    },
    #[error("line {line}: parent chain of {name:?} forms a cycle")]
    Cycle { name: String, line: usize },
    #[error(
        "line {line}: level skip: {name:?} at level {level} has parent {parent:?} at level {parent_level}"
    )]
    LevelSkip {
        name: String,
        level: usize,
        parent: String,
        parent_level: usize,
        line: usize,
    },
    #[error("line {line}: {name:?} at level {level} hangs off ROOT but the top level is {depth}")]
    RootBelowTop {
        name: String,
        level: usize,
        depth: usize,
        line: usize,
    },
    #[error("level {level} has no concepts")]
    EmptyLevel { level: usize },
    #[error("line {line}: concept {name:?} at level {level} has no children")]
    Childless {
        name: String,
        level: usize,
        line: usize,
    },
    #[error("level {level} out of range 1..={depth}")]
    LevelOutOfRange { level: usize, depth: usize },
    #[error("unknown concept {0:?}")]
    UnknownConcept(String),
}

impl OntologyError {
    /// Source line the error refers to, if any.
    pub fn line(&self) -> Option<usize> {
        use OntologyError::*;
        match self {
            Syntax { line, .. }
            | DuplicateName { line, .. }
            | DuplicateColumn { line, .. }
            | LeafWithoutColumn { line, .. }
            | ColumnOnNonLeaf { line, .. }
            | MissingParent { line, .. }
            | Cycle { line, .. }
            | LevelSkip { line, .. }
            | RootBelowTop { line, .. }
            | Childless { line, .. } => Some(*line),
            Empty | EmptyLevel { .. } | LevelOutOfRange { .. } | UnknownConcept(_) => None,
        }
    }
}

/// A validated, immutable ontology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ontology {
    concepts: Vec<Concept>,
    depth: usize,
    by_name: HashMap<String, usize>,
    children: Vec<Vec<usize>>,
    /// `levels[l - 1]` lists the concepts on level `l` in declaration order.
    levels: Vec<Vec<usize>>,
}

/// Parses and validates ontology text.
pub fn parse_ontology(text: &str) -> Result<Ontology, OntologyError> {
    Ontology::parse(text)
}

impl Ontology {
    pub fn parse(text: &str) -> Result<Self, OntologyError> {
        let text = text.strip_prefix('\u{feff}').unwrap_or(text);
        let mut declared = Vec::new();
        for (idx, raw) in text.split('\n').enumerate() {
            let line_no = idx + 1;
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            declared.push((parse_line(line, line_no)?, line_no));
        }
        Self::validate(declared)
    }

    /// Builds an ontology from concepts in declaration order, applying the
    /// same validation as [`Ontology::parse`]. Line numbers in errors are the
    /// 1-based positions in `concepts`.
    pub fn from_concepts(concepts: Vec<Concept>) -> Result<Self, OntologyError> {
        let declared = concepts
            .into_iter()
            .enumerate()
            .map(|(i, mut c)| {
                c.name = c.name.trim().to_string();
                c.column = c.column.map(|s| s.trim().to_string());
                if let Parent::Concept(p) = &mut c.parent {
                    *p = p.trim().to_string();
                }
                (c, i + 1)
            })
            .collect();
        Self::validate(declared)
    }

    fn validate(declared: Vec<(Concept, usize)>) -> Result<Self, OntologyError> {
        if declared.is_empty() {
            return Err(OntologyError::Empty);
        }
        for (c, line) in &declared {
            if c.name.is_empty() {
                return Err(syntax(*line, "empty concept name"));
            }
            if c.level == 0 {
                return Err(syntax(*line, "level must be >= 1"));
            }
            if matches!(&c.parent, Parent::Concept(p) if p.is_empty()) {
                return Err(syntax(*line, "empty parent name"));
            }
            if matches!(&c.column, Some(col) if col.is_empty()) {
                return Err(syntax(*line, "empty column name"));
            }
        }

        let mut by_name: HashMap<String, usize> = HashMap::with_capacity(declared.len());
        for (i, (c, line)) in declared.iter().enumerate() {
            if let Some(&first) = by_name.get(&c.name) {
                return Err(OntologyError::DuplicateName {
                    name: c.name.clone(),
                    line: *line,
                    first_line: declared[first].1,
                });
            }
            by_name.insert(c.name.clone(), i);
        }

        for (c, line) in &declared {
            match (&c.column, c.level) {
                (None, 1) => {
                    return Err(OntologyError::LeafWithoutColumn {
                        name: c.name.clone(),
                        line: *line,
                    })
                }
                (Some(_), level) if level > 1 => {
                    return Err(OntologyError::ColumnOnNonLeaf {
                        name: c.name.clone(),
                        level,
                        line: *line,
                    })
                }
                _ => {}
            }
        }

        let mut columns: HashMap<&str, usize> = HashMap::new();
        for (c, line) in &declared {
            if let Some(col) = &c.column {
                if let Some(&first_line) = columns.get(col.as_str()) {
                    return Err(OntologyError::DuplicateColumn {
                        column: col.clone(),
                        line: *line,
                        first_line,
                    });
                }
                columns.insert(col, *line);
            }
        }

        let mut parent_idx = vec![None; declared.len()];
        for (i, (c, line)) in declared.iter().enumerate() {
            if let Parent::Concept(p) = &c.parent {
                match by_name.get(p) {
                    Some(&j) => parent_idx[i] = Some(j),
                    None => {
                        return Err(OntologyError::MissingParent {
                            name: c.name.clone(),
                            parent: p.clone(),
                            line: *line,
                        })
                    }
                }
            }
        }

        for (i, (c, line)) in declared.iter().enumerate() {
            let mut cur = i;
            let mut steps = 0;
            while let Some(p) = parent_idx[cur] {
                cur = p;
                steps += 1;
                if steps > declared.len() {
                    return Err(OntologyError::Cycle {
                        name: c.name.clone(),
                        line: *line,
                    });
                }
            }
        }

        let depth = declared.iter().map(|(c, _)| c.level).max().unwrap_or(0);
        for (i, (c, line)) in declared.iter().enumerate() {
            match parent_idx[i] {
                Some(p) => {
                    let parent = &declared[p].0;
                    if parent.level != c.level + 1 {
                        return Err(OntologyError::LevelSkip {
                            name: c.name.clone(),
                            level: c.level,
                            parent: parent.name.clone(),
                            parent_level: parent.level,
                            line: *line,
                        });
                    }
                }
                None if c.level != depth => {
                    return Err(OntologyError::RootBelowTop {
                        name: c.name.clone(),
                        level: c.level,
                        depth,
                        line: *line,
                    })
                }
                None => {}
            }
        }
        // Top-level concepts with a concept parent are caught above: that
        // parent would sit at depth + 1.

        let mut levels = vec![Vec::new(); depth];
        let mut children = vec![Vec::new(); declared.len()];
        for (i, (c, _)) in declared.iter().enumerate() {
            levels[c.level - 1].push(i);
            if let Some(p) = parent_idx[i] {
                children[p].push(i);
            }
        }
        if let Some(l) = levels.iter().position(Vec::is_empty) {
            return Err(OntologyError::EmptyLevel { level: l + 1 });
        }
        for (i, (c, line)) in declared.iter().enumerate() {
            if c.level > 1 && children[i].is_empty() {
                return Err(OntologyError::Childless {
                    name: c.name.clone(),
                    level: c.level,
                    line: *line,
                });
            }
        }

        Ok(Self {
            concepts: declared.into_iter().map(|(c, _)| c).collect(),
            depth,
            by_name,
            children,
            levels,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// All concepts in declaration order.
    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn get(&self, name: &str) -> Option<&Concept> {
        self.by_name.get(name).map(|&i| &self.concepts[i])
    }

    /// Concepts on `level`, in declaration order.
    pub fn concepts_at_level(&self, level: usize) -> Result<Vec<&Concept>, OntologyError> {
        Ok(self
            .level_indices(level)?
            .iter()
            .map(|&i| &self.concepts[i])
            .collect())
    }

    /// Children of `name` in declaration order; empty for leaves.
    pub fn children_of(&self, name: &str) -> Result<Vec<&Concept>, OntologyError> {
        let idx = *self
            .by_name
            .get(name)
            .ok_or_else(|| OntologyError::UnknownConcept(name.to_string()))?;
        Ok(self.children[idx]
            .iter()
            .map(|&i| &self.concepts[i])
            .collect())
    }

    /// Number of concepts on each level, bottom up.
    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }

    /// Leaf column bindings in level-1 declaration order.
    pub fn leaf_columns(&self) -> Vec<&str> {
        self.levels[0]
            .iter()
            .filter_map(|&i| self.concepts[i].column.as_deref())
            .collect()
    }

    /// Indices (into [`Ontology::concepts`]) of the concepts on `level`.
    pub fn level_indices(&self, level: usize) -> Result<&[usize], OntologyError> {
        if level == 0 || level > self.depth {
            return Err(OntologyError::LevelOutOfRange {
                level,
                depth: self.depth,
            });
        }
        Ok(&self.levels[level - 1])
    }

    /// Indices of the children of the concept at `idx`.
    pub fn child_indices(&self, idx: usize) -> &[usize] {
        &self.children[idx]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    /// Renders the ontology in the line format accepted by [`Ontology::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.concepts {
            out.push_str("concept\t");
            out.push_str(&quote_if_needed(&c.name, false));
            out.push_str(&format!("\tlevel={}\tparent=", c.level));
            match &c.parent {
                Parent::Root => out.push_str(ROOT),
                Parent::Concept(p) => out.push_str(&quote_if_needed(p, p == ROOT)),
            }
            if let Some(col) = &c.column {
                out.push_str("\tcolumn=");
                out.push_str(&quote_if_needed(col, false));
            }
            out.push('\n');
        }
        out
    }
}

fn syntax(line: usize, message: impl Into<String>) -> OntologyError {
    OntologyError::Syntax {
        line,
        message: message.into(),
    }
}

fn parse_line(line: &str, line_no: usize) -> Result<Concept, OntologyError> {
    let fields = split_fields(line).map_err(|m| syntax(line_no, m))?;
    let mut it = fields.into_iter();
    match it.next() {
        Some(Field {
            key: None, value, ..
        }) if value == "concept" => {}
        _ => return Err(syntax(line_no, "expected line to start with `concept`")),
    }
    let name = match it.next() {
        Some(Field {
            key: None, value, ..
        }) if !value.is_empty() => value,
        Some(Field { key: Some(_), .. }) => {
            return Err(syntax(
                line_no,
                "concept name containing `=` must be quoted",
            ))
        }
        _ => return Err(syntax(line_no, "missing concept name")),
    };

    let mut level = None;
    let mut parent = None;
    let mut column = None;
    for f in it {
        let key = f
            .key
            .ok_or_else(|| syntax(line_no, format!("expected key=value, got {:?}", f.value)))?;
        let slot_taken = match key.as_str() {
            "level" => {
                let v: usize = f
                    .value
                    .parse()
                    .map_err(|_| syntax(line_no, format!("invalid level {:?}", f.value)))?;
                level.replace(v).is_some()
            }
            "parent" => {
                let p = if f.value == ROOT && !f.value_quoted {
                    Parent::Root
                } else {
                    Parent::Concept(f.value)
                };
                parent.replace(p).is_some()
            }
            "column" => column.replace(f.value).is_some(),
            other => return Err(syntax(line_no, format!("unknown key {other:?}"))),
        };
        if slot_taken {
            return Err(syntax(line_no, format!("key {key:?} given twice")));
        }
    }
    Ok(Concept {
        name,
        level: level.ok_or_else(|| syntax(line_no, "missing level="))?,
        parent: parent.ok_or_else(|| syntax(line_no, "missing parent="))?,
        column,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(name: &str, parent: &str) -> String {
        format!("concept\t{name}\tlevel=1\tparent={parent}\tcolumn={name}\n")
    }

    #[test]
    fn single_leaf_is_depth_one() {
        let o = parse_ontology("concept\tx\tlevel=1\tparent=ROOT\tcolumn=x\n").unwrap();
        assert_eq!(o.depth(), 1);
        let l1 = o.concepts_at_level(1).unwrap();
        assert_eq!(l1.len(), 1);
        assert_eq!(l1[0].name, "x");
        assert!(o.children_of("x").unwrap().is_empty());
    }

    #[test]
    fn forward_references_allowed() {
        let text = format!(
            "{}{}concept\tP\tlevel=2\tparent=ROOT\n",
            leaf("a", "P"),
            leaf("b", "P")
        );
        let o = parse_ontology(&text).unwrap();
        assert_eq!(o.depth(), 2);
        let kids: Vec<_> = o
            .children_of("P")
            .unwrap()
            .iter()
            .map(|c| c.name.clone())
            .collect();
        assert_eq!(kids, ["a", "b"]);
    }

    #[test]
    fn level_skip_rejected() {
        let text = "concept\tT\tlevel=3\tparent=ROOT\n\
                    concept\tM\tlevel=2\tparent=T\n\
                    concept\ta\tlevel=1\tparent=M\tcolumn=a\n\
                    concept\tb\tlevel=1\tparent=T\tcolumn=b\n";
        let err = parse_ontology(text).unwrap_err();
        assert!(
            matches!(err, OntologyError::LevelSkip { line: 4, .. }),
            "{err}"
        );
    }

    #[test]
    fn parent_at_lower_level_is_level_skip() {
        // A level-3 concept whose parent is a leaf.
        let text = "concept\tx\tlevel=3\tparent=a\n\
                    concept\ta\tlevel=1\tparent=ROOT\tcolumn=a\n";
        // The leaf hangs off ROOT below the top level, but the level-3 edge
        // comes first in declaration order.
        let err = parse_ontology(text).unwrap_err();
        assert!(
            matches!(err, OntologyError::LevelSkip { line: 1, .. }),
            "{err}"
        );
    }

    type Check = fn(&OntologyError) -> bool;

    #[test]
    fn error_catalogue() {
        let cases: Vec<(String, Check)> = vec![
            (
                format!("{}{}", leaf("a", "ROOT"), leaf("a", "ROOT")),
                |e| matches!(e, OntologyError::DuplicateName { line: 2, first_line: 1, .. }),
            ),
            (
                "concept\ta\tlevel=1\tparent=ROOT\tcolumn=c\nconcept\tb\tlevel=1\tparent=ROOT\tcolumn=c\n".into(),
                |e| matches!(e, OntologyError::DuplicateColumn { line: 2, .. }),
            ),
            (leaf("a", "Nope"), |e| matches!(e, OntologyError::MissingParent { .. })),
            (
                "concept\ta\tlevel=1\tparent=ROOT\n".into(),
                |e| matches!(e, OntologyError::LeafWithoutColumn { .. }),
            ),
            (
                format!("{}concept\tP\tlevel=2\tparent=ROOT\tcolumn=p\n", leaf("a", "P")),
                |e| matches!(e, OntologyError::ColumnOnNonLeaf { .. }),
            ),
            (
                "concept\tT\tlevel=3\tparent=ROOT\nconcept\ta\tlevel=1\tparent=ROOT\tcolumn=a\n".into(),
                |e| matches!(e, OntologyError::RootBelowTop { .. }),
            ),
            (
                "concept\tP\tlevel=2\tparent=Q\nconcept\tQ\tlevel=2\tparent=P\n".into(),
                |e| matches!(e, OntologyError::Cycle { .. }),
            ),
            (
                format!("{}concept\tP\tlevel=2\tparent=ROOT\nconcept\tE\tlevel=2\tparent=ROOT\n", leaf("a", "P")),
                |e| matches!(e, OntologyError::Childless { .. }),
            ),
            ("".into(), |e| matches!(e, OntologyError::Empty)),
            ("# only a comment\n\n".into(), |e| matches!(e, OntologyError::Empty)),
            ("concept\tx\tlevel=one\tparent=ROOT\n".into(), |e| {
                matches!(e, OntologyError::Syntax { line: 1, .. })
            }),
            ("node\tx\tlevel=1\tparent=ROOT\tcolumn=x\n".into(), |e| {
                matches!(e, OntologyError::Syntax { .. })
            }),
            ("concept\t\"x\tlevel=1\n".into(), |e| matches!(e, OntologyError::Syntax { .. })),
        ];
        for (text, check) in cases {
            let err = parse_ontology(&text).unwrap_err();
            assert!(check(&err), "unexpected error {err:?} for {text:?}");
        }
    }

    #[test]
    fn empty_level_detected() {
        let concepts = vec![Concept {
            name: "T".into(),
            level: 2,
            parent: Parent::Root,
            column: None,
        }];
        assert!(matches!(
            Ontology::from_concepts(concepts).unwrap_err(),
            OntologyError::EmptyLevel { level: 1 }
        ));
    }

    #[test]
    fn quoting_and_trimming() {
        let text = "concept\t\"Pubs\tand \"\"Bars\"\"\"\tlevel=1\tparent=\"ROOT\"\tcolumn=\"pubs\tbars\"\n\
                    concept\t  ROOT  \tlevel=2\tparent=ROOT\n";
        let o = parse_ontology(text).unwrap();
        let leaf = &o.concepts()[0];
        assert_eq!(leaf.name, "Pubs\tand \"Bars\"");
        assert_eq!(leaf.column.as_deref(), Some("pubs\tbars"));
        assert_eq!(leaf.parent, Parent::Concept("ROOT".into()));
        assert_eq!(o.concepts()[1].name, "ROOT");
        let again = parse_ontology(&o.to_text()).unwrap();
        assert_eq!(again, o);
    }

    #[test]
    fn names_are_case_sensitive() {
        let text = format!("{}{}", leaf("a", "ROOT"), leaf("A", "ROOT"));
        assert_eq!(parse_ontology(&text).unwrap().level_sizes(), [2]);
    }

    #[test]
    fn level_queries_reject_out_of_range() {
        let o = parse_ontology(&leaf("a", "ROOT")).unwrap();
        assert!(matches!(
            o.concepts_at_level(0),
            Err(OntologyError::LevelOutOfRange { .. })
        ));
        assert!(matches!(
            o.concepts_at_level(2),
            Err(OntologyError::LevelOutOfRange { .. })
        ));
        assert!(matches!(
            o.children_of("zz"),
            Err(OntologyError::UnknownConcept(_))
        ));
    }
}
