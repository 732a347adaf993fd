use std::collections::HashSet;

use crate::error::{Error, Result};

/// Extract label names, in document order, from a MULAN XML label header.
///
/// Every `label` element anywhere under the root counts, so hierarchical
/// headers (nested `label` elements) flatten in pre-order.
pub fn parse_label_header(xml_text: &str) -> Result<Vec<String>> {
    let doc = roxmltree::Document::parse(xml_text).map_err(|e| {
        let pos = e.pos();
        Error::Xml { line: pos.row, column: pos.col, message: e.to_string() }
    })?;
    let mut names = Vec::new();
    let mut seen = HashSet::new();
    for node in doc.root_element().descendants() {
        if !node.is_element() || node.tag_name().name() != "label" {
            continue;
        }
        let pos = doc.text_pos_at(node.range().start);
        let name = node.attribute("name").ok_or_else(|| Error::Xml {
            line: pos.row,
            column: pos.col,
            message: "`label` element without a `name` attribute".into(),
        })?;
        if !seen.insert(name.to_string()) {
            return Err(Error::Schema(format!("duplicate label `{name}` in XML header")));
        }
        names.push(name.to_string());
    }
    if names.len() < 2 {
        return Err(Error::Schema(format!(
            "XML header declares {} label(s); a multilabel dataset needs at least 2",
            names.len()
        )));
    }
    Ok(names)
}
