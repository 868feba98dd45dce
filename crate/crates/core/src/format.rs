//! On-disk formats: decimal-string numbers and the nested martingale file.
//!
//! Every number is written as a decimal string with 17 significant digits,
//! which round-trips any `f64` bit for bit.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{AdaptedProcess, BuildOptions, NodeSpec, OutcomeTree, DEFAULT_MAX_LEAVES};

pub const MARTINGALE_FILE_VERSION: u32 = 1;
/// Sibling probabilities in a file must sum to 1 within this tolerance.
pub const FILE_PROB_TOL: f64 = 1e-9;
/// The root value must vanish within this multiple of `max(1, max |X_v|)`.
pub const ROOT_VALUE_TOL: f64 = 1e-12;

/// `x` with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_decimal(s: &str) -> std::result::Result<f64, String> {
    s.trim().parse::<f64>().map_err(|e| format!("{s:?} is not a decimal number: {e}"))
}

/// `#[serde(with = "dec")]` for `f64` fields.
pub mod dec {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::fmt17(*x))
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Str(String),
        Num(f64),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) => super::parse_decimal(&s).map_err(de::Error::custom),
        }
    }

    /// `#[serde(with = "dec::vec")]` for `Vec<f64>`.
    pub mod vec {
        use serde::ser::SerializeSeq;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(xs.len()))?;
            for x in xs {
                seq.serialize_element(&super::super::fmt17(*x))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            let raw = Vec::<String>::deserialize(d)?;
            raw.iter().map(|s| super::super::parse_decimal(s).map_err(serde::de::Error::custom)).collect()
        }
    }
}

/// One node record of a martingale file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub branch_prob: String,
    pub value: String,
    #[serde(default)]
    pub children: Vec<NodeRecord>,
}

/// Versioned nested tree with a value on each node, root first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleFile {
    pub version: u32,
    pub tree: NodeRecord,
}

impl MartingaleFile {
    pub fn from_process(proc: &AdaptedProcess) -> Self {
        fn build(proc: &AdaptedProcess, v: usize) -> NodeRecord {
            let t = proc.tree();
            NodeRecord {
                branch_prob: fmt17(t.branch_prob(v)),
                value: fmt17(proc.value(v)),
                children: t.children(v).map(|c| build(proc, c)).collect(),
            }
        }
        Self { version: MARTINGALE_FILE_VERSION, tree: build(proc, 0) }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("martingale file serializes")
    }

    /// Parses JSON text; syntax errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Parse { at: format!("line {} column {}", e.line(), e.column()), msg: e.to_string() })
    }

    /// Builds the process, checking the version, the root record, sibling
    /// probability sums and uniform leaf depth. Errors name the offending
    /// record as a path such as `tree.children[1].value`.
    pub fn to_process(&self) -> Result<AdaptedProcess> {
        if self.version != MARTINGALE_FILE_VERSION {
            return Err(Error::Parse {
                at: "version".into(),
                msg: format!("unsupported version {}, expected {MARTINGALE_FILE_VERSION}", self.version),
            });
        }
        let spec = to_spec(&self.tree, "tree")?;
        if spec.branch_prob != 1.0 {
            return Err(Error::Parse { at: "tree.branch_prob".into(), msg: "root branch_prob must be 1".into() });
        }
        // values in the breadth-first order used by OutcomeTree
        let mut values = Vec::new();
        let mut queue = VecDeque::from([(&self.tree, "tree".to_string())]);
        while let Some((rec, at)) = queue.pop_front() {
            let at_value = format!("{at}.value");
            let v = parse_decimal(&rec.value).map_err(|msg| Error::Parse { at: at_value.clone(), msg })?;
            values.push(v);
            for (i, c) in rec.children.iter().enumerate() {
                queue.push_back((c, format!("{at}.children[{i}]")));
            }
        }
        // X_0 = 0; a closure of a mean-zero variable carries rounding residue at the root
        let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if !(values[0].abs() <= ROOT_VALUE_TOL * scale) {
            return Err(Error::Parse { at: "tree.value".into(), msg: format!("root value must be 0, got {}", values[0]) });
        }
        let tree = OutcomeTree::from_spec(&spec, BuildOptions { prob_tol: FILE_PROB_TOL, max_leaves: DEFAULT_MAX_LEAVES })?;
        AdaptedProcess::new(Arc::new(tree), values)
    }
}

fn to_spec(rec: &NodeRecord, at: &str) -> Result<NodeSpec> {
    let branch_prob = parse_decimal(&rec.branch_prob)
        .map_err(|msg| Error::Parse { at: format!("{at}.branch_prob"), msg })?;
    let children = rec
        .children
        .iter()
        .enumerate()
        .map(|(i, c)| to_spec(c, &format!("{at}.children[{i}]")))
        .collect::<Result<_>>()?;
    Ok(NodeSpec { branch_prob, children })
}

/// Parses martingale-file JSON straight into a process.
pub fn parse_martingale(text: &str) -> Result<AdaptedProcess> {
    MartingaleFile::from_json(text)?.to_process()
}

pub fn write_martingale(proc: &AdaptedProcess) -> String {
    MartingaleFile::from_process(proc).to_json()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_random_martingale, gen_symmetric_walk};

    #[test]
    fn seventeen_digits_round_trip() {
        for &x in &[0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, f64::MIN_POSITIVE, 1.0 + f64::EPSILON] {
            assert_eq!(parse_decimal(&fmt17(x)).unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(fmt17(4.0), "4.0000000000000000e0");
    }

    #[test]
    fn file_round_trip_is_exact() {
        let m = gen_random_martingale(3, 3, 4, 1.5).unwrap();
        let text = write_martingale(&m);
        let back = parse_martingale(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(write_martingale(&back), text);
    }

    #[test]
    fn hand_written_file_parses() {
        let text = r#"{"version": 1, "tree": {"branch_prob": "1", "value": "0", "children": [
            {"branch_prob": "0.25", "value": "3", "children": []},
            {"branch_prob": "0.75", "value": "-1", "children": []}]}}"#;
        let m = parse_martingale(text).unwrap();
        assert_eq!(m.values(), &[0.0, 3.0, -1.0]);
        assert!(m.is_martingale(1e-10));
    }

    #[test]
    fn errors_are_located() {
        let syntax = parse_martingale("{\"version\": 1,\n \"tree\": [}").unwrap_err();
        assert!(matches!(&syntax, Error::Parse { at, .. } if at.starts_with("line 2")), "{syntax:?}");

        let walk = gen_symmetric_walk(2).unwrap();
        let mut f = MartingaleFile::from_process(&walk);
        f.tree.children[1].children[0].value = "abc".into();
        let e = f.to_process().unwrap_err();
        assert!(matches!(&e, Error::Parse { at, .. } if at == "tree.children[1].children[0].value"), "{e:?}");

        let mut f = MartingaleFile::from_process(&walk);
        f.tree.value = "1".into();
        assert!(matches!(f.to_process(), Err(Error::Parse { at, .. }) if at == "tree.value"));
        // rounding residue from closing a mean-zero variable is tolerated
        f.tree.value = "2.7755575615628914e-17".into();
        assert!(f.to_process().is_ok());

        let mut f = MartingaleFile::from_process(&walk);
        f.tree.children[0].children.clear();
        assert!(matches!(f.to_process(), Err(Error::Structure(_))));

        let mut f = MartingaleFile::from_process(&walk);
        f.tree.children[0].branch_prob = "0.6".into();
        assert!(matches!(f.to_process(), Err(Error::Structure(_))));

        let mut f = MartingaleFile::from_process(&walk);
        f.version = 9;
        assert!(matches!(f.to_process(), Err(Error::Parse { at, .. }) if at == "version"));
    }

    #[test]
    fn near_normalised_probabilities_accepted() {
        let text = r#"{"version": 1, "tree": {"branch_prob": "1", "value": "0", "children": [
            {"branch_prob": "0.3333333333", "value": "2", "children": []},
            {"branch_prob": "0.6666666667", "value": "-1", "children": []}]}}"#;
        assert!(parse_martingale(text).is_ok());
    }
}
