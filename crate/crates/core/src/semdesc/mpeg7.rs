//! Importer for the restricted MPEG-7 Semantic Description subset:
//! `SemanticBase`, `Label`, `Definition`, `StructuredAnnotation`,
//! `FreeTextAnnotation`, `Relation` and `MediaOccurrence`.
//!
//! Container elements (`Mpeg7`, `Description`, `DescriptionUnit`,
//! `Semantic`, ...) are walked through. Any other element met inside a
//! `SemanticBase` is skipped and reported as a warning.

use std::collections::BTreeMap;

use roxmltree::{Document, Node};

use super::graph::{MediaOccurrence, NodeKind, SemanticGraph, SemanticNode, SemanticRelation};
use super::SemdescError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImportWarning {
    pub line: u32,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct Import {
    pub graph: SemanticGraph,
    pub warnings: Vec<ImportWarning>,
}

pub fn import_mpeg7(document: &[u8]) -> Result<SemanticGraph, SemdescError> {
    import_mpeg7_with_warnings(document).map(|i| i.graph)
}

pub fn import_mpeg7_with_warnings(document: &[u8]) -> Result<Import, SemdescError> {
    let text = std::str::from_utf8(document).map_err(|e| SemdescError::Parse {
        line: line_of_offset(document, e.valid_up_to()),
        offset: e.valid_up_to(),
        message: "document is not valid UTF-8".into(),
    })?;
    let doc = Document::parse(text).map_err(|e| {
        let pos = e.pos();
        SemdescError::Parse {
            line: pos.row,
            offset: offset_of(text, pos.row, pos.col),
            message: e.to_string(),
        }
    })?;

    let mut importer = Importer {
        doc: &doc,
        nodes: Vec::new(),
        relations: Vec::new(),
        media: Vec::new(),
        warnings: Vec::new(),
    };
    importer.walk(doc.root_element())?;
    let Importer {
        nodes,
        relations,
        media,
        warnings,
        ..
    } = importer;
    Ok(Import {
        graph: SemanticGraph::new(nodes, relations, media),
        warnings,
    })
}

struct Importer<'d, 'input> {
    doc: &'d Document<'input>,
    nodes: Vec<SemanticNode>,
    relations: Vec<SemanticRelation>,
    media: Vec<MediaOccurrence>,
    warnings: Vec<ImportWarning>,
}

impl Importer<'_, '_> {
    fn walk(&mut self, node: Node) -> Result<(), SemdescError> {
        if node.tag_name().name() == "SemanticBase" {
            return self.semantic_base(node);
        }
        for child in node.children().filter(Node::is_element) {
            self.walk(child)?;
        }
        Ok(())
    }

    fn semantic_base(&mut self, el: Node) -> Result<(), SemdescError> {
        let xsi_type = attr_local(el, "type").unwrap_or_default();
        let kind =
            NodeKind::from_xsi_type(xsi_type).ok_or_else(|| SemdescError::UnsupportedKind {
                xsi_type: xsi_type.to_string(),
                line: self.line(el),
            })?;
        let id = attr_local(el, "id").unwrap_or_default().trim().to_string();

        let mut label = None;
        let mut annotation: Option<BTreeMap<String, String>> = None;
        let mut free_text: Option<String> = None;

        for child in el.children().filter(Node::is_element) {
            match child.tag_name().name() {
                "Label" => {
                    let name = child_text(child, "Name").unwrap_or_else(|| normalized_text(child));
                    if !name.is_empty() {
                        label = Some(name);
                    }
                }
                "Definition" => {
                    for def in child.children().filter(Node::is_element) {
                        match def.tag_name().name() {
                            "StructuredAnnotation" => {
                                let slots = annotation.get_or_insert_with(BTreeMap::new);
                                structured_slots(def, slots);
                            }
                            "FreeTextAnnotation" => {
                                let text = normalized_text(def);
                                free_text = Some(match free_text.take() {
                                    Some(prev) => format!("{prev} {text}"),
                                    None => text,
                                });
                            }
                            other => self.skip(def, other),
                        }
                    }
                }
                "Relation" => {
                    let relation = attr_local(child, "type").unwrap_or_default().to_string();
                    let target = attr_local(child, "target").unwrap_or_default();
                    let target = target.trim().trim_start_matches('#').to_string();
                    self.relations
                        .push(SemanticRelation::new(id.clone(), relation, target));
                }
                "MediaOccurrence" => {
                    for uri in child
                        .descendants()
                        .filter(|n| n.is_element() && n.tag_name().name() == "MediaUri")
                    {
                        self.media.push(MediaOccurrence {
                            node: id.clone(),
                            uri: normalized_text(uri),
                        });
                    }
                }
                other => self.skip(child, other),
            }
        }

        let mut node = SemanticNode::new(id.clone(), kind, label.unwrap_or_else(|| id.clone()));
        node.structured_annotation = annotation;
        node.free_text = free_text;
        self.nodes.push(node);
        Ok(())
    }

    fn skip(&mut self, el: Node, name: &str) {
        self.warnings.push(ImportWarning {
            line: self.line(el),
            message: format!("skipped unsupported element <{name}>"),
        });
    }

    fn line(&self, el: Node) -> u32 {
        self.doc.text_pos_at(el.range().start).row
    }
}

/// Each slot element (`Who`, `WhatObject`, `Where`, ...) contributes its
/// `Name` under the slot's own tag, and every other child under that
/// child's tag.
fn structured_slots(el: Node, slots: &mut BTreeMap<String, String>) {
    for slot in el.children().filter(Node::is_element) {
        let slot_name = slot.tag_name().name();
        let mut has_children = false;
        for part in slot.children().filter(Node::is_element) {
            has_children = true;
            let key = if part.tag_name().name() == "Name" {
                slot_name
            } else {
                part.tag_name().name()
            };
            slots.insert(key.to_string(), normalized_text(part));
        }
        if !has_children {
            slots.insert(slot_name.to_string(), normalized_text(slot));
        }
    }
}

fn attr_local<'a>(el: Node<'a, '_>, local: &str) -> Option<&'a str> {
    el.attributes()
        .find(|a| a.name() == local)
        .map(|a| a.value())
}

fn child_text(el: Node, name: &str) -> Option<String> {
    el.children()
        .find(|c| c.is_element() && c.tag_name().name() == name)
        .map(normalized_text)
}

/// Concatenated descendant text with whitespace runs collapsed.
fn normalized_text(el: Node) -> String {
    let raw: String = el
        .descendants()
        .filter(Node::is_text)
        .filter_map(|n| n.text())
        .collect::<Vec<_>>()
        .join(" ");
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn offset_of(text: &str, row: u32, col: u32) -> usize {
    let mut offset = 0;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        if i + 1 == row as usize {
            let col_bytes: usize = line
                .chars()
                .take(col.saturating_sub(1) as usize)
                .map(char::len_utf8)
                .sum();
            return offset + col_bytes;
        }
        offset += line.len();
    }
    text.len()
}

fn line_of_offset(bytes: &[u8], offset: usize) -> u32 {
    1 + bytes[..offset].iter().filter(|&&b| b == b'\n').count() as u32
}
