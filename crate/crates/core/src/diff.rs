//! Line-aligned comparison of two descriptions.

use std::collections::BTreeMap;
use std::fmt;

use crate::codec::{Description, UnitLine};
use crate::model::UnitKind;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DiffEntry {
    OnlyLeft {
        id: u32,
        line: String,
    },
    OnlyRight {
        id: u32,
        line: String,
    },
    KindChanged {
        id: u32,
        left: UnitKind,
        right: UnitKind,
    },
    /// `None` marks a field absent on that side (optional `act_fun`).
    FieldChanged {
        id: u32,
        key: &'static str,
        left: Option<String>,
        right: Option<String>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DescriptionDiff {
    pub left_len: usize,
    pub right_len: usize,
    pub entries: Vec<DiffEntry>,
}

impl DescriptionDiff {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn field_changes(id: u32, a: &UnitLine, b: &UnitLine, out: &mut Vec<DiffEntry>) {
    let left: BTreeMap<&'static str, String> = a.fields().into_iter().collect();
    let right: BTreeMap<&'static str, String> = b.fields().into_iter().collect();
    // Walk keys in schema order of whichever side has more fields.
    let mut keys: Vec<&'static str> = a.fields().into_iter().map(|(k, _)| k).collect();
    for (k, _) in b.fields() {
        if !keys.contains(&k) {
            let at = keys.len() - 1;
            keys.insert(at, k);
        }
    }
    for key in keys {
        let (l, r) = (left.get(key), right.get(key));
        if l != r {
            out.push(DiffEntry::FieldChanged {
                id,
                key,
                left: l.cloned(),
                right: r.cloned(),
            });
        }
    }
}

pub fn diff_descriptions(a: &Description, b: &Description) -> DescriptionDiff {
    let mut entries = Vec::new();
    let n = a.len().max(b.len());
    for k in 0..n {
        match (a.lines.get(k), b.lines.get(k)) {
            (Some(l), Some(r)) if l.kind() != r.kind() => entries.push(DiffEntry::KindChanged {
                id: l.id,
                left: l.kind(),
                right: r.kind(),
            }),
            (Some(l), Some(r)) => field_changes(l.id, l, r, &mut entries),
            (Some(l), None) => entries.push(DiffEntry::OnlyLeft {
                id: l.id,
                line: l.to_string(),
            }),
            (None, Some(r)) => entries.push(DiffEntry::OnlyRight {
                id: r.id,
                line: r.to_string(),
            }),
            (None, None) => unreachable!(),
        }
    }
    DescriptionDiff {
        left_len: a.len(),
        right_len: b.len(),
        entries,
    }
}

impl fmt::Display for DiffEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: &Option<String>| v.clone().unwrap_or_else(|| "(absent)".into());
        match self {
            DiffEntry::OnlyLeft { line, .. } => write!(f, "- {line}"),
            DiffEntry::OnlyRight { line, .. } => write!(f, "+ {line}"),
            DiffEntry::KindChanged { id, left, right } => {
                write!(f, "~ id:{id} kind: {left} -> {right}")
            }
            DiffEntry::FieldChanged {
                id,
                key,
                left,
                right,
            } => write!(f, "~ id:{id} {key}: {} -> {}", show(left), show(right)),
        }
    }
}

impl fmt::Display for DescriptionDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} vs {} lines", self.left_len, self.right_len)?;
        for e in &self.entries {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: &str = "id:1;in_size:64;out_size:10;act_fun:ReLU;connect_to:2\nid:2;name:Dropout;in_size:10;out_size:10;value:0.5;connect_to:Null";

    #[test]
    fn reflexive() {
        let d = Description::parse(T).unwrap();
        assert!(diff_descriptions(&d, &d).is_empty());
    }

    #[test]
    fn optional_field_and_kind_change() {
        let a = Description::parse(T).unwrap();
        let b = Description::parse(&T.replace(";act_fun:ReLU", "")).unwrap();
        assert_eq!(
            diff_descriptions(&a, &b).entries,
            [DiffEntry::FieldChanged {
                id: 1,
                key: "act_fun",
                left: Some("ReLU".into()),
                right: None
            }]
        );
        let c = Description::parse(&T.replace(
            "id:1;in_size:64;out_size:10;act_fun:ReLU",
            "id:1;name:BN;in_size:64;out_size:10;value:Null",
        ))
        .unwrap();
        assert!(matches!(
            diff_descriptions(&a, &c).entries[..],
            [DiffEntry::KindChanged { id: 1, .. }]
        ));
    }
}
