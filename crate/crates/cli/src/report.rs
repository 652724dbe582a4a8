//! Bit-stable JSON reports: sorted keys, every float written with 17 significant
//! digits, integers verbatim.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<Node>),
    Obj(BTreeMap<String, Node>),
}

impl From<f64> for Node {
    fn from(x: f64) -> Self {
        Node::Num(x)
    }
}
impl From<usize> for Node {
    fn from(x: usize) -> Self {
        Node::Int(x as i64)
    }
}
impl From<u64> for Node {
    fn from(x: u64) -> Self {
        Node::Int(x as i64)
    }
}
impl From<bool> for Node {
    fn from(x: bool) -> Self {
        Node::Bool(x)
    }
}
impl From<&str> for Node {
    fn from(x: &str) -> Self {
        Node::Str(x.into())
    }
}
impl From<String> for Node {
    fn from(x: String) -> Self {
        Node::Str(x)
    }
}
impl<T: Into<Node>> From<Option<T>> for Node {
    fn from(x: Option<T>) -> Self {
        x.map_or(Node::Null, Into::into)
    }
}
impl<T: Into<Node> + Clone> From<&[T]> for Node {
    fn from(x: &[T]) -> Self {
        Node::Arr(x.iter().cloned().map(Into::into).collect())
    }
}
impl<T: Into<Node>> From<Vec<T>> for Node {
    fn from(x: Vec<T>) -> Self {
        Node::Arr(x.into_iter().map(Into::into).collect())
    }
}

impl From<&serde_json::Value> for Node {
    fn from(v: &serde_json::Value) -> Self {
        use serde_json::Value as V;
        match v {
            V::Null => Node::Null,
            V::Bool(b) => Node::Bool(*b),
            V::Number(n) => match n.as_i64() {
                Some(i) => Node::Int(i),
                None => Node::Num(n.as_f64().unwrap_or(f64::NAN)),
            },
            V::String(s) => Node::Str(s.clone()),
            V::Array(a) => Node::Arr(a.iter().map(Node::from).collect()),
            V::Object(o) => Node::Obj(o.iter().map(|(k, v)| (k.clone(), Node::from(v))).collect()),
        }
    }
}

fn fmt_num(x: f64, out: &mut String) {
    if x.is_finite() {
        let _ = write!(out, "{x:.16e}");
    } else {
        out.push_str("null");
    }
}

fn fmt_str(s: &str, out: &mut String) {
    out.push_str(&serde_json::to_string(s).expect("strings always serialize"));
}

impl Node {
    fn write(&self, depth: usize, out: &mut String) {
        let pad = |d: usize, out: &mut String| out.extend(std::iter::repeat_n("  ", d));
        match self {
            Node::Null => out.push_str("null"),
            Node::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Node::Int(i) => {
                let _ = write!(out, "{i}");
            }
            Node::Num(x) => fmt_num(*x, out),
            Node::Str(s) => fmt_str(s, out),
            Node::Arr(a) if a.is_empty() => out.push_str("[]"),
            Node::Arr(a) => {
                // numeric arrays stay on one line
                if a.iter().all(|n| matches!(n, Node::Num(_) | Node::Int(_) | Node::Null)) {
                    out.push('[');
                    for (i, n) in a.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        n.write(depth, out);
                    }
                    out.push(']');
                    return;
                }
                out.push_str("[\n");
                for (i, n) in a.iter().enumerate() {
                    pad(depth + 1, out);
                    n.write(depth + 1, out);
                    out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
                }
                pad(depth, out);
                out.push(']');
            }
            Node::Obj(o) if o.is_empty() => out.push_str("{}"),
            Node::Obj(o) => {
                out.push_str("{\n");
                for (i, (k, v)) in o.iter().enumerate() {
                    pad(depth + 1, out);
                    fmt_str(k, out);
                    out.push_str(": ");
                    v.write(depth + 1, out);
                    out.push_str(if i + 1 < o.len() { ",\n" } else { "\n" });
                }
                pad(depth, out);
                out.push('}');
            }
        }
    }

    /// Path of the first non-finite number, depth first in key order.
    pub fn first_non_finite(&self, prefix: &str) -> Option<String> {
        match self {
            Node::Num(x) if !x.is_finite() => Some(prefix.to_string()),
            Node::Arr(a) => a.iter().enumerate().find_map(|(i, n)| n.first_non_finite(&format!("{prefix}[{i}]"))),
            Node::Obj(o) => o.iter().find_map(|(k, n)| {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                n.first_non_finite(&p)
            }),
            _ => None,
        }
    }
}

/// A report under construction, addressed by dotted paths.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    root: BTreeMap<String, Node>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, path: &str, value: impl Into<Node>) {
        let mut parts: Vec<&str> = path.split('.').collect();
        let last = parts.pop().expect("nonempty path");
        let mut map = &mut self.root;
        for p in parts {
            let e = map.entry(p.to_string()).or_insert_with(|| Node::Obj(BTreeMap::new()));
            if !matches!(e, Node::Obj(_)) {
                *e = Node::Obj(BTreeMap::new());
            }
            let Node::Obj(m) = e else { unreachable!() };
            map = m;
        }
        map.insert(last.to_string(), value.into());
    }

    pub fn get(&self, path: &str) -> Option<&Node> {
        let mut parts = path.split('.');
        let mut cur = self.root.get(parts.next()?)?;
        for p in parts {
            match cur {
                Node::Obj(m) => cur = m.get(p)?,
                _ => return None,
            }
        }
        Some(cur)
    }

    pub fn num(&self, path: &str) -> Option<f64> {
        match self.get(path)? {
            Node::Num(x) => Some(*x),
            Node::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn nums(&self, path: &str) -> Option<Vec<f64>> {
        match self.get(path)? {
            Node::Arr(a) => a
                .iter()
                .map(|n| match n {
                    Node::Num(x) => Some(*x),
                    Node::Int(i) => Some(*i as f64),
                    _ => None,
                })
                .collect(),
            _ => None,
        }
    }

    pub fn flag(&self, path: &str) -> Option<bool> {
        match self.get(path)? {
            Node::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn get_root(self) -> Node {
        Node::Obj(self.root)
    }

    pub fn first_non_finite(&self) -> Option<String> {
        Node::Obj(self.root.clone()).first_non_finite("")
    }

    pub fn to_json(&self) -> String {
        let mut s = String::new();
        Node::Obj(self.root.clone()).write(0, &mut s);
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }
}
