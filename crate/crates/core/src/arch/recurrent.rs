use super::require;
use crate::cdag::{CDag, CDagBuilder};
use crate::error::Result;

/// No composition: every source feeds its own sink `1:i`.
pub fn build_flat(len: usize) -> Result<CDag> {
    require(len >= 1, || "flat composition needs L >= 1".into())?;
    let mut b = CDagBuilder::new(len);
    let sinks: Vec<_> = (1..=len)
        .map(|i| {
            let s = b.source(i);
            b.node([s])
        })
        .collect();
    b.sinks(sinks);
    b.build()
}

/// Left-to-right recurrence `g(...g(g(e_1, e_2), e_3)..., e_L)`.
pub fn build_uni_rnn(len: usize) -> Result<CDag> {
    require(len >= 2, || {
        format!("recurrent composition needs L >= 2, got {len}")
    })?;
    let mut b = CDagBuilder::new(len);
    let first = [b.source(1), b.source(2)];
    let mut prev = b.node(first);
    for t in 3..=len {
        let s = b.source(t);
        prev = b.node([prev, s]);
    }
    b.sink(prev);
    b.build()
}

/// Forward and backward recurrences; sinks are `[forward, backward]`.
pub fn build_bi_rnn(len: usize) -> Result<CDag> {
    require(len >= 2, || {
        format!("recurrent composition needs L >= 2, got {len}")
    })?;
    let mut b = CDagBuilder::new(len);
    let first = [b.source(1), b.source(2)];
    let mut fwd = b.node(first);
    for t in 3..=len {
        let s = b.source(t);
        fwd = b.node([fwd, s]);
    }
    let first = [b.source(len), b.source(len - 1)];
    let mut bwd = b.node(first);
    for t in (1..=len - 2).rev() {
        let s = b.source(t);
        bwd = b.node([bwd, s]);
    }
    b.sinks([fwd, bwd]);
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdag::NodeRef;

    #[test]
    fn flat_shape() {
        let d = build_flat(4).unwrap();
        assert_eq!((d.nodes().len(), d.edges().len()), (8, 4));
        let s = d.structural_stats().unwrap();
        assert_eq!((s.k, s.q, s.m, s.depth), (1, 1, 4, 1));
        assert!(build_flat(0).is_err());
    }

    #[test]
    fn uni_rnn_shape() {
        let d = build_uni_rnn(4).unwrap();
        assert_eq!(d.sinks(), &[NodeRef::new(3, 1)]);
        assert_eq!(
            d.parents(NodeRef::new(2, 1)),
            vec![NodeRef::new(1, 1), NodeRef::source(3)]
        );
        let s = d.structural_stats().unwrap();
        assert_eq!((s.k, s.q, s.m, s.depth), (2, 1, 1, 3));
        assert!(build_uni_rnn(1).is_err());
    }

    #[test]
    fn bi_rnn_shape() {
        let d = build_bi_rnn(4).unwrap();
        assert_eq!(d.sinks(), &[NodeRef::new(3, 1), NodeRef::new(3, 2)]);
        assert_eq!(
            d.parents(NodeRef::new(1, 2)),
            vec![NodeRef::source(4), NodeRef::source(3)]
        );
        let s = d.structural_stats().unwrap();
        assert_eq!((s.k, s.q, s.m, s.depth), (2, 2, 2, 3));
        let d2 = build_bi_rnn(2).unwrap();
        assert_eq!(d2.nodes().len(), 4);
        assert_eq!(d2.sinks().len(), 2);
    }
}
