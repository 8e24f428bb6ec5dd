use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::require;
use crate::cdag::{CDag, CDagBuilder, Handle};
use crate::error::{Error, Result};

/// Binary bracketing over token positions, written `((1,2),((3,4),5))`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ParseTree {
    Leaf(u32),
    Node(Box<ParseTree>, Box<ParseTree>),
}

impl ParseTree {
    pub fn node(left: ParseTree, right: ParseTree) -> Self {
        ParseTree::Node(Box::new(left), Box::new(right))
    }

    /// Balanced bracketing of `lo..=hi`, splitting `n` leaves into
    /// `ceil(n/2)` left and `floor(n/2)` right.
    pub fn balanced(lo: u32, hi: u32) -> Self {
        if lo == hi {
            return ParseTree::Leaf(lo);
        }
        let n = hi - lo + 1;
        let mid = lo + n.div_ceil(2) - 1;
        ParseTree::node(Self::balanced(lo, mid), Self::balanced(mid + 1, hi))
    }

    pub fn leaves(&self) -> Vec<u32> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut Vec<u32>) {
        match self {
            ParseTree::Leaf(i) => out.push(*i),
            ParseTree::Node(l, r) => {
                l.collect(out);
                r.collect(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            ParseTree::Leaf(_) => 0,
            ParseTree::Node(l, r) => 1 + l.depth().max(r.depth()),
        }
    }
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseTree::Leaf(i) => write!(f, "{i}"),
            ParseTree::Node(l, r) => write!(f, "({l},{r})"),
        }
    }
}

impl From<ParseTree> for String {
    fn from(t: ParseTree) -> String {
        t.to_string()
    }
}

impl TryFrom<String> for ParseTree {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for ParseTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let toks: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pos = 0;
        let tree = parse(&toks, &mut pos)?;
        if pos != toks.len() {
            return Err(Error::Parse(format!("trailing input in parse tree {s:?}")));
        }
        Ok(tree)
    }
}

fn parse(t: &[char], pos: &mut usize) -> Result<ParseTree> {
    let err = |what: &str, at: usize| Error::Parse(format!("parse tree: {what} at offset {at}"));
    match t.get(*pos) {
        Some('(') => {
            *pos += 1;
            let left = parse(t, pos)?;
            if t.get(*pos) != Some(&',') {
                return Err(err("expected ',' (trees must be binary)", *pos));
            }
            *pos += 1;
            let right = parse(t, pos)?;
            if t.get(*pos) != Some(&')') {
                return Err(err("expected ')' (trees must be binary)", *pos));
            }
            *pos += 1;
            Ok(ParseTree::node(left, right))
        }
        Some(c) if c.is_ascii_digit() => {
            let start = *pos;
            while t.get(*pos).is_some_and(|c| c.is_ascii_digit()) {
                *pos += 1;
            }
            let digits: String = t[start..*pos].iter().collect();
            digits
                .parse()
                .map(ParseTree::Leaf)
                .map_err(|_| err("bad leaf", start))
        }
        _ => Err(err("expected '(' or a leaf", *pos)),
    }
}

/// cDAG mirroring `tree`; argument order is (left, right).
pub fn build_parse_tree(tree: &ParseTree) -> Result<CDag> {
    let leaves = tree.leaves();
    require(leaves.len() >= 2, || {
        "a parse tree needs at least two leaves".into()
    })?;
    for (i, &l) in leaves.iter().enumerate() {
        require(l as usize == i + 1, || {
            format!(
                "parse tree leaves must be 1..{} in order, found {leaves:?}",
                leaves.len()
            )
        })?;
    }
    let mut b = CDagBuilder::new(leaves.len());
    let root = add(&mut b, tree);
    b.sink(root);
    b.build()
}

fn add(b: &mut CDagBuilder, t: &ParseTree) -> Handle {
    match t {
        ParseTree::Leaf(i) => b.source(*i as usize),
        ParseTree::Node(l, r) => {
            let l = add(b, l);
            let r = add(b, r);
            b.node([l, r])
        }
    }
}

/// Balanced binary tree over `1..=L` (left-leaning for non-powers of two).
pub fn build_balanced_tree(len: usize) -> Result<CDag> {
    require(len >= 2, || {
        format!("tree composition needs L >= 2, got {len}")
    })?;
    build_parse_tree(&ParseTree::balanced(1, len as u32))
}
