//! Numeric encodings of descriptions for downstream mining.
//!
//! Two encodings are provided. [`tokenize`] turns each line into a lossless
//! token sequence where numbers ride on a single `<num>` token by value.
//! [`unit_vector`] maps each line to a fixed 24-slot feature vector.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{Description, UnitLine, FIELD_KEYS};
use crate::model::{MfShape, NodeSpec, PoolType, UnitKind};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const NUM_ID: u32 = 2;

const RESERVED: [&str; 3] = ["<pad>", "<unk>", "<num>"];
const PUNCT: [&str; 3] = [";", ":", "-"];
const LITERALS: [&str; 5] = ["Max", "Avg", "Yes", "No", "Null"];
const COMMON_OPS: [&str; 9] = [
    "ReLU",
    "BN",
    "Dropout",
    "Addition",
    "Concatenation",
    "Interpolation",
    "Sigmoid",
    "Tanh",
    "Softmax",
];

fn fixed_tokens() -> impl Iterator<Item = &'static str> {
    RESERVED
        .into_iter()
        .chain(PUNCT)
        .chain(FIELD_KEYS.iter().copied())
        .chain(LITERALS)
        .chain(COMMON_OPS)
}

#[derive(Debug, Error)]
pub enum VectorizeError {
    #[error("token {0:?} is not in the closed vocabulary")]
    UnknownToken(String),
    #[error("token id {0} is not in the vocabulary")]
    UnknownId(u32),
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
    #[error("vocabulary file: {0}")]
    Io(#[from] std::io::Error),
    #[error("vocabulary file: {0}")]
    Json(#[from] serde_json::Error),
}

/// Token to id map. Ids `0..fixed_len()` are fixed; an open vocabulary
/// appends unseen words after them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    ids: BTreeMap<String, u32>,
    words: Vec<String>,
    closed: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabularyFile {
    #[serde(default)]
    closed: bool,
    tokens: BTreeMap<String, u32>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        let mut v = Vocabulary {
            ids: BTreeMap::new(),
            words: Vec::new(),
            closed: false,
        };
        for t in fixed_tokens() {
            v.push(t);
        }
        v
    }
}

impl Vocabulary {
    pub fn fixed_len() -> usize {
        fixed_tokens().count()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn set_closed(&mut self, closed: bool) {
        self.closed = closed;
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    fn push(&mut self, t: &str) -> u32 {
        let id = self.words.len() as u32;
        self.ids.insert(t.to_owned(), id);
        self.words.push(t.to_owned());
        id
    }

    fn lookup_or_insert(&mut self, t: &str) -> Result<u32, VectorizeError> {
        match self.id(t) {
            Some(id) => Ok(id),
            None if self.closed => Err(VectorizeError::UnknownToken(t.to_owned())),
            None => Ok(self.push(t)),
        }
    }

    pub fn to_json(&self) -> String {
        let file = VocabularyFile {
            closed: self.closed,
            tokens: self.ids.clone(),
        };
        serde_json::to_string_pretty(&file).expect("vocabulary serializes")
    }

    /// Loads a vocabulary, checking that ids are dense, unique, and that the
    /// fixed tokens keep their fixed ids.
    pub fn from_json(text: &str) -> Result<Self, VectorizeError> {
        let file: VocabularyFile = serde_json::from_str(text)?;
        let n = file.tokens.len();
        let mut words = vec![None; n];
        for (t, &id) in &file.tokens {
            let slot = words.get_mut(id as usize).ok_or_else(|| {
                VectorizeError::InvalidVocabulary(format!("id {id} out of range"))
            })?;
            if slot.is_some() {
                return Err(VectorizeError::InvalidVocabulary(format!(
                    "id {id} assigned twice"
                )));
            }
            *slot = Some(t.clone());
        }
        for (expected, t) in fixed_tokens().enumerate() {
            if file.tokens.get(t) != Some(&(expected as u32)) {
                return Err(VectorizeError::InvalidVocabulary(format!(
                    "fixed token {t:?} must have id {expected}"
                )));
            }
        }
        Ok(Vocabulary {
            ids: file.tokens,
            words: words.into_iter().map(Option::unwrap).collect(),
            closed: file.closed,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Token {
    pub id: u32,
    /// Set only on `<num>` tokens.
    pub value: Option<f64>,
}

/// Tokens per unit line, in line order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TokenStream {
    pub units: Vec<Vec<Token>>,
}

/// A word is carried numerically only when printing the parsed number gives
/// back the same spelling.
fn as_number(word: &str) -> Option<f64> {
    let digits_and_dot = word.bytes().all(|b| b.is_ascii_digit() || b == b'.')
        && word.bytes().filter(|&b| b == b'.').count() <= 1
        && word.bytes().next().is_some_and(|b| b.is_ascii_digit());
    if !digits_and_dot {
        return None;
    }
    let v: f64 = word.parse().ok()?;
    (v.to_string() == word).then_some(v)
}

fn tokenize_line(line: &str, vocab: &mut Vocabulary) -> Result<Vec<Token>, VectorizeError> {
    let mut out = Vec::new();
    let mut emit_word = |w: &str, out: &mut Vec<Token>| -> Result<(), VectorizeError> {
        if w.is_empty() {
            return Ok(());
        }
        out.push(match as_number(w) {
            Some(v) => Token {
                id: NUM_ID,
                value: Some(v),
            },
            None => Token {
                id: vocab.lookup_or_insert(w)?,
                value: None,
            },
        });
        Ok(())
    };
    let mut start = 0;
    for (i, ch) in line.char_indices() {
        if matches!(ch, ';' | ':' | '-') {
            emit_word(&line[start..i], &mut out)?;
            let p = &line[i..i + 1];
            out.push(Token {
                id: PUNCT.iter().position(|&q| q == p).unwrap() as u32 + RESERVED.len() as u32,
                value: None,
            });
            start = i + 1;
        }
    }
    emit_word(&line[start..], &mut out)?;
    Ok(out)
}

/// Tokenizes every line. An open vocabulary grows to admit unseen words; a
/// closed one rejects them.
pub fn tokenize(d: &Description, vocab: &mut Vocabulary) -> Result<TokenStream, VectorizeError> {
    let units = d
        .lines
        .iter()
        .map(|l| tokenize_line(&l.to_string(), vocab))
        .collect::<Result<_, _>>()?;
    Ok(TokenStream { units })
}

pub fn detokenize(ts: &TokenStream, vocab: &Vocabulary) -> Result<String, VectorizeError> {
    let mut out = String::new();
    for (k, unit) in ts.units.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        for t in unit {
            match (t.id, t.value) {
                (NUM_ID, Some(v)) => write!(out, "{v}").unwrap(),
                (id, _) => out.push_str(vocab.token(id).ok_or(VectorizeError::UnknownId(id))?),
            }
        }
    }
    Ok(out)
}

pub const VECTOR_LEN: usize = 24;

pub const VECTOR_SLOTS: [&str; VECTOR_LEN] = [
    "kind_conv",
    "kind_pool",
    "kind_full",
    "kind_mf",
    "id",
    "in_w",
    "in_h",
    "in_c",
    "out_w",
    "out_h",
    "out_c",
    "kernel_w",
    "kernel_h",
    "stride_v",
    "stride_h",
    "pad_up",
    "pad_down",
    "pad_left",
    "pad_right",
    "dilation",
    "groups",
    "bias",
    "pool_max",
    "mf_value",
];

fn put(v: &mut [f64], at: usize, dims: &[u32]) {
    for (k, &d) in dims.iter().enumerate() {
        v[at + k] = f64::from(d);
    }
}

/// Fixed 24-slot features of one unit. Absent fields are 0 and flat shapes
/// fill only their first slot. Connections are not encoded.
pub fn unit_vector(line: &UnitLine) -> [f64; VECTOR_LEN] {
    let mut v = [0.0; VECTOR_LEN];
    let kind = UnitKind::ALL
        .iter()
        .position(|&k| k == line.kind())
        .unwrap();
    v[kind] = 1.0;
    v[4] = f64::from(line.id);
    let in_dims = line.spec.in_dims();
    let out_dims = line.spec.out_dims();
    put(&mut v, 5, &in_dims);
    put(&mut v, 8, &out_dims);
    match &line.spec {
        NodeSpec::Conv(c) => {
            put(&mut v, 11, &[c.kernel.width, c.kernel.height]);
            put(&mut v, 13, &[c.stride.vertical, c.stride.horizontal]);
            put(&mut v, 15, &c.padding.to_array().map(|p| p.count));
            v[19] = f64::from(c.dilation);
            v[20] = f64::from(c.groups);
            v[21] = f64::from(u8::from(c.bias_used));
        }
        NodeSpec::Pool(p) => {
            put(&mut v, 11, &[p.kernel.width, p.kernel.height]);
            put(&mut v, 13, &[p.stride.vertical, p.stride.horizontal]);
            put(&mut v, 15, &p.padding.to_array());
            v[19] = f64::from(p.dilation);
            v[21] = f64::from(u8::from(p.bias_used));
            v[22] = f64::from(u8::from(p.pool_type == PoolType::Max));
        }
        NodeSpec::Full(_) => {}
        NodeSpec::Mf(m) => {
            debug_assert!(matches!(m.in_size, MfShape::Flat(_) | MfShape::Spatial(_)));
            v[23] = m
                .values
                .iter()
                .find_map(|s| s.parse::<f64>().ok().filter(|x| x.is_finite()))
                .unwrap_or(0.0);
        }
    }
    v
}

/// One CSV row per unit, with a header row of slot names.
pub fn vectors_csv(d: &Description) -> String {
    let mut out = VECTOR_SLOTS.join(",");
    out.push('\n');
    for l in &d.lines {
        let row: Vec<String> = unit_vector(l).iter().map(f64::to_string).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const DROPOUT: &str = "id:1;name:Dropout;in_size:512;out_size:512;value:0.5;connect_to:Null";

    #[test]
    fn dropout_line_tokens() {
        let d = Description::parse(DROPOUT).unwrap();
        let mut v = Vocabulary::default();
        let ts = tokenize(&d, &mut v).unwrap();
        let toks = &ts.units[0];
        assert!(toks.contains(&Token {
            id: NUM_ID,
            value: Some(0.5)
        }));
        let null = v.id("Null").unwrap();
        assert!(toks.iter().any(|t| t.id == null));
        assert_eq!(detokenize(&ts, &v).unwrap(), DROPOUT);
        assert_eq!(tokenize(&d, &mut v).unwrap(), ts);
    }

    #[test]
    fn numbers_keep_their_spelling() {
        assert_eq!(as_number("0.5"), Some(0.5));
        assert_eq!(as_number("112"), Some(112.0));
        assert_eq!(as_number("0.50"), None);
        assert_eq!(as_number("007"), None);
        assert_eq!(as_number("inf"), None);
        assert_eq!(as_number(".5"), None);
    }

    #[test]
    fn closed_vocabulary_rejects_unseen_words() {
        let t = "id:1;name:Swish;in_size:4;out_size:4;value:Null;connect_to:Null";
        let d = Description::parse(t).unwrap();
        let mut open = Vocabulary::default();
        let before = open.len();
        tokenize(&d, &mut open).unwrap();
        assert_eq!(open.len(), before + 1);

        let mut closed = Vocabulary::default();
        closed.set_closed(true);
        assert!(matches!(
            tokenize(&d, &mut closed),
            Err(VectorizeError::UnknownToken(w)) if w == "Swish"
        ));
    }

    #[test]
    fn vocabulary_file_round_trip() {
        let mut v = Vocabulary::default();
        let d =
            Description::parse("id:1;name:Swish;in_size:4;out_size:4;value:a-b;connect_to:Null")
                .unwrap();
        tokenize(&d, &mut v).unwrap();
        v.set_closed(true);
        let back = Vocabulary::from_json(&v.to_json()).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.id("<pad>"), Some(PAD_ID));
        assert_eq!(back.id("<unk>"), Some(UNK_ID));

        let broken = v.to_json().replace("\"<pad>\": 0", "\"<pad>\": 7");
        assert!(Vocabulary::from_json(&broken).is_err());
    }

    #[test]
    fn vector_layout() {
        let d = Description::parse(
            "id:1;in_size:32-32-3;out_size:32-32-3;kernel:1-1;stride:1-1;padding:0-0-0-0-0-0-0-0;dilation:1;groups:1;bias_used:No;connect_to:2\nid:2;name:Dropout;in_size:512;out_size:512;value:0.5;connect_to:Null",
        )
        .unwrap();
        let conv = unit_vector(&d.lines[0]);
        let expected: [f64; 24] = [
            1., 0., 0., 0., 1., 32., 32., 3., 32., 32., 3., 1., 1., 1., 1., 0., 0., 0., 0., 1., 1.,
            0., 0., 0.,
        ];
        assert_eq!(conv, expected);
        let mf = unit_vector(&d.lines[1]);
        assert_eq!(&mf[..4], &[0., 0., 0., 1.]);
        assert_eq!(mf[5..11], [512., 0., 0., 512., 0., 0.]);
        assert_eq!(mf[23], 0.5);
        let csv = vectors_csv(&d);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("kind_conv,kind_pool"));
    }
}
