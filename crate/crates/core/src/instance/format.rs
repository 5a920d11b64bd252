//! Line-oriented instance files.
//!
//! ```text
//! node <id> <input|pool|output> capacity=<float>
//! arc <from> <to> cost=<float> [capacity=<float>]
//! quality <attribute> <input-id> <float>
//! bound <attribute> <output-id> <float>
//! ```
//!
//! `#` starts a comment. Nodes must be declared before they are used.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{Arc, Node, NodeKind, PoolingInstance};
use crate::error::{Error, Result};

pub fn parse_instance(text: &str) -> Result<PoolingInstance> {
    let mut inst = PoolingInstance::default();
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut attrs: HashMap<String, usize> = HashMap::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let Some((&keyword, rest)) = tokens.split_first() else {
            continue;
        };
        let syntax = |message: String| Error::Syntax { line, message };
        let node_ref = |id: &str| ids.get(id).copied().ok_or_else(|| syntax(format!("unknown node '{id}'")));

        match keyword {
            "node" => {
                let [id, kind, cap] = rest else {
                    return Err(syntax("expected: node <id> <input|pool|output> capacity=<float>".into()));
                };
                let kind = match *kind {
                    "input" => NodeKind::Input,
                    "pool" => NodeKind::Pool,
                    "output" => NodeKind::Output,
                    other => return Err(syntax(format!("unknown node kind '{other}'"))),
                };
                let capacity = keyed(cap, "capacity").map_err(&syntax)?;
                if ids.contains_key(*id) {
                    return Err(syntax(format!("node '{id}' declared twice")));
                }
                ids.insert(id.to_string(), inst.nodes.len());
                inst.nodes.push(Node {
                    id: id.to_string(),
                    kind,
                    capacity,
                });
            }
            "arc" => {
                let (from, to, cost, cap) = match rest {
                    [f, t, c] => (f, t, c, None),
                    [f, t, c, cap] => (f, t, c, Some(cap)),
                    _ => return Err(syntax("expected: arc <from> <to> cost=<float> [capacity=<float>]".into())),
                };
                let arc = Arc {
                    from: node_ref(from)?,
                    to: node_ref(to)?,
                    cost: keyed(cost, "cost").map_err(&syntax)?,
                    capacity: cap.map(|c| keyed(c, "capacity")).transpose().map_err(&syntax)?,
                };
                inst.arcs.push(arc);
            }
            "quality" | "bound" => {
                let [attr, node, value] = rest else {
                    return Err(syntax(format!("expected: {keyword} <attribute> <node-id> <float>")));
                };
                let node = node_ref(node)?;
                let value = number(value).map_err(&syntax)?;
                let next = attrs.len();
                let k = *attrs.entry(attr.to_string()).or_insert_with(|| {
                    inst.attributes.push(attr.to_string());
                    next
                });
                let map = if keyword == "quality" {
                    &mut inst.input_quality
                } else {
                    &mut inst.output_upper
                };
                if map.insert((k, node), value).is_some() {
                    return Err(syntax(format!("{keyword} for ({attr}, {}) given twice", inst.nodes[node].id)));
                }
            }
            other => return Err(syntax(format!("unknown keyword '{other}'"))),
        }
    }

    let violations = inst.validate();
    if !violations.is_empty() {
        return Err(Error::Invalid(violations.join("; ")));
    }
    Ok(inst)
}

fn number(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("'{s}' is not a number"))
}

fn keyed(token: &str, key: &str) -> std::result::Result<f64, String> {
    match token.split_once('=') {
        Some((k, v)) if k == key => number(v),
        _ => Err(format!("expected {key}=<float>, found '{token}'")),
    }
}

/// Serializes an instance in the format read by [`parse_instance`].
pub fn write_instance(inst: &PoolingInstance) -> String {
    let mut out = String::new();
    if !inst.name.is_empty() {
        let _ = writeln!(out, "# {}", inst.name);
    }
    for n in &inst.nodes {
        let _ = writeln!(out, "node {} {} capacity={}", n.id, n.kind, n.capacity);
    }
    for a in &inst.arcs {
        let _ = write!(out, "arc {} {} cost={}", inst.nodes[a.from].id, inst.nodes[a.to].id, a.cost);
        if let Some(c) = a.capacity {
            let _ = write!(out, " capacity={c}");
        }
        out.push('\n');
    }
    for (&(k, i), v) in &inst.input_quality {
        let _ = writeln!(out, "quality {} {} {v}", inst.attributes[k], inst.nodes[i].id);
    }
    for (&(k, j), v) in &inst.output_upper {
        let _ = writeln!(out, "bound {} {} {v}", inst.attributes[k], inst.nodes[j].id);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
node i input capacity=1
node p pool capacity=1   # the only pool
node o output capacity=1
arc i p cost=1
arc p o cost=-2 capacity=0.5
quality s i 1.0
bound s o 2
";

    #[test]
    fn minimal_file() {
        let inst = parse_instance(MINIMAL).unwrap();
        assert_eq!((inst.num_nodes(), inst.num_arcs()), (3, 2));
        assert_eq!(inst.arcs[1].capacity, Some(0.5));
    }

    #[test]
    fn pool_to_pool_arc_is_semantic_error() {
        let text = format!("{MINIMAL}node q pool capacity=1\narc p q cost=0\narc q o cost=0\n");
        let err = parse_instance(&text).unwrap_err();
        assert!(matches!(&err, Error::Invalid(m) if m.contains("pool-to-pool")), "{err}");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_instance("node a input capacity=1\narc a b cost=1\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 2, .. }));
        let err = parse_instance("node a input cap=1\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 1, .. }));
        let err = parse_instance("\n\nfoo\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 3, .. }));
    }

    #[test]
    fn written_text_parses_back() {
        let inst = parse_instance(MINIMAL).unwrap();
        let again = parse_instance(&write_instance(&inst)).unwrap();
        assert_eq!(inst, again);
    }
}
