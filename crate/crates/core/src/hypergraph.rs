//! d-uniform hypergraphs with canonical edge encoding and the `HGR v1`
//! text format.
//!
//! ```text
//! HGR v1 <N> <d> <M> <seed>
//! <v_1> <v_2> ... <v_d>      (M lines, strictly ascending ids in 1..=N)
//! ```

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::sync::OnceLock;

use crate::error::{invalid, Error, Result};

/// Set-membership key for an edge: sorted vertex ids packed into fixed-width
/// fields of a `u128` when they fit, otherwise stored verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EdgeKey {
    Packed(u128),
    Wide(Box<[u32]>),
}

#[derive(Debug, Clone, Copy)]
pub struct EdgeCodec {
    bits: u32,
    packed: bool,
}

impl EdgeCodec {
    /// Codec for edges of `arity` ids drawn from `0..=max_id`.
    pub fn new(max_id: u64, arity: u32) -> Self {
        let bits = (64 - max_id.leading_zeros()).max(1);
        Self {
            bits,
            packed: bits as u64 * arity as u64 <= 128,
        }
    }

    /// `ids` must already be sorted.
    pub fn encode(&self, ids: &[u32]) -> EdgeKey {
        if self.packed {
            let mut key = 0u128;
            for &v in ids {
                key = (key << self.bits) | v as u128;
            }
            EdgeKey::Packed(key)
        } else {
            EdgeKey::Wide(ids.into())
        }
    }
}

/// Vertex-to-edge incidence in compressed rows; vertex `v` (1-based) owns
/// `edges[offsets[v-1]..offsets[v]]`.
#[derive(Debug, Clone)]
pub struct Incidence {
    offsets: Vec<u32>,
    edges: Vec<u32>,
}

impl Incidence {
    pub fn edges_of(&self, v: u32) -> &[u32] {
        let i = v as usize - 1;
        &self.edges[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }
}

/// A realization of the random hypergraph. Vertex ids are 1-based; every
/// edge is a strictly increasing `d`-tuple and edges are kept in
/// lexicographic order, so equal edge sets compare equal.
#[derive(Debug, Clone)]
pub struct Hypergraph {
    n: u32,
    d: u32,
    seed: u64,
    flat: Vec<u32>,
    incidence: OnceLock<Incidence>,
}

impl PartialEq for Hypergraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.d == other.d && self.flat == other.flat
    }
}

impl Eq for Hypergraph {}

impl Hypergraph {
    /// Validates and canonicalizes an edge list. Each edge may be given in
    /// any vertex order; duplicates are rejected.
    pub fn from_edges<E: AsRef<[u32]>>(n: u32, d: u32, edges: &[E], seed: u64) -> Result<Self> {
        if d < 2 {
            return invalid("d", format!("edge size {d} must be at least 2"));
        }
        if (n as u64) < d as u64 {
            return invalid("N", format!("vertex count {n} must be at least d = {d}"));
        }
        let codec = EdgeCodec::new(n as u64, d);
        let mut seen = HashSet::with_capacity(edges.len());
        let mut sorted: Vec<Vec<u32>> = Vec::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            let mut e = e.as_ref().to_vec();
            e.sort_unstable();
            if e.len() != d as usize {
                return invalid(
                    "edges",
                    format!("edge {i} has {} vertices, expected {d}", e.len()),
                );
            }
            if e.windows(2).any(|w| w[0] == w[1]) {
                return invalid("edges", format!("edge {i} repeats a vertex"));
            }
            if e[0] == 0 || e[d as usize - 1] > n {
                return invalid("edges", format!("edge {i} has a vertex outside 1..={n}"));
            }
            if !seen.insert(codec.encode(&e)) {
                return invalid("edges", format!("edge {i} is a duplicate"));
            }
            sorted.push(e);
        }
        sorted.sort_unstable();
        Ok(Self::from_canonical(n, d, sorted.concat(), seed))
    }

    /// `flat` holds sorted, distinct, in-range edges; they are put in
    /// lexicographic order here.
    pub(crate) fn from_canonical(n: u32, d: u32, mut flat: Vec<u32>, seed: u64) -> Self {
        let k = d as usize;
        let m = flat.len() / k;
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_unstable_by(|&a, &b| flat[a * k..(a + 1) * k].cmp(&flat[b * k..(b + 1) * k]));
        if order.iter().enumerate().any(|(i, &j)| i != j) {
            flat = order
                .iter()
                .flat_map(|&j| flat[j * k..(j + 1) * k].iter().copied())
                .collect();
        }
        Self {
            n,
            d,
            seed,
            flat,
            incidence: OnceLock::new(),
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    /// Seed recorded with the hypergraph (0 for hand-built ones).
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn edge_count(&self) -> usize {
        self.flat.len() / self.d as usize
    }

    pub fn edge(&self, i: usize) -> &[u32] {
        let k = self.d as usize;
        &self.flat[i * k..(i + 1) * k]
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        self.flat.chunks_exact(self.d as usize)
    }

    pub fn incidence(&self) -> &Incidence {
        self.incidence.get_or_init(|| {
            let n = self.n as usize;
            let mut offsets = vec![0u32; n + 1];
            for &v in &self.flat {
                offsets[v as usize] += 1;
            }
            for i in 0..n {
                offsets[i + 1] += offsets[i];
            }
            let mut fill = offsets.clone();
            let mut edges = vec![0u32; self.flat.len()];
            for (e, edge) in self.edges().enumerate() {
                for &v in edge {
                    let slot = &mut fill[v as usize - 1];
                    edges[*slot as usize] = e as u32;
                    *slot += 1;
                }
            }
            Incidence { offsets, edges }
        })
    }

    pub fn write_hgr<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "HGR v1 {} {} {} {}",
            self.n,
            self.d,
            self.edge_count(),
            self.seed
        )?;
        let mut line = String::new();
        for edge in self.edges() {
            line.clear();
            for (i, v) in edge.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                line.push_str(&v.to_string());
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_hgr<R: BufRead>(input: R) -> Result<Self> {
        let bad = |line: usize, reason: String| Error::Format { line, reason };
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| bad(1, "empty file".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 6 || fields[0] != "HGR" || fields[1] != "v1" {
            return Err(bad(
                1,
                format!("expected `HGR v1 N d M seed`, found `{header}`"),
            ));
        }
        let num = |i: usize, name: &str| -> Result<u64> {
            fields[i].parse::<u64>().map_err(|_| {
                bad(
                    1,
                    format!("{name} `{}` is not a non-negative integer", fields[i]),
                )
            })
        };
        let n = num(2, "N")?;
        let d = num(3, "d")?;
        let m = num(4, "M")?;
        let seed = num(5, "seed")?;
        if n > u32::MAX as u64 || d < 2 || d > n {
            return Err(bad(1, format!("unsupported shape N = {n}, d = {d}")));
        }
        let (n, d) = (n as u32, d as u32);

        let codec = EdgeCodec::new(n as u64, d);
        let mut seen = HashSet::with_capacity(m as usize);
        let mut flat = Vec::with_capacity(m as usize * d as usize);
        let mut count = 0u64;
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if count == m {
                return Err(bad(lineno, format!("more than the declared {m} edges")));
            }
            let start = flat.len();
            for tok in line.split_whitespace() {
                let v: u32 = tok
                    .parse()
                    .map_err(|_| bad(lineno, format!("`{tok}` is not a vertex id")))?;
                if v == 0 || v > n {
                    return Err(bad(lineno, format!("vertex {v} outside 1..={n}")));
                }
                flat.push(v);
            }
            let edge = &flat[start..];
            if edge.len() != d as usize {
                return Err(bad(
                    lineno,
                    format!("edge has {} vertices, expected {d}", edge.len()),
                ));
            }
            if edge.windows(2).any(|w| w[0] >= w[1]) {
                return Err(bad(lineno, "vertex ids must be strictly ascending".into()));
            }
            if !seen.insert(codec.encode(edge)) {
                return Err(bad(lineno, "duplicate edge".into()));
            }
            count += 1;
        }
        if count != m {
            return Err(bad(
                count as usize + 2,
                format!("expected {m} edges, found {count}"),
            ));
        }
        Ok(Self::from_canonical(n, d, flat, seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalizes_and_validates() {
        let h = Hypergraph::from_edges(6, 3, &[[5, 4, 3], [3, 1, 2]], 0).unwrap();
        assert_eq!(h.edge(0), &[1, 2, 3]);
        assert_eq!(h.edge(1), &[3, 4, 5]);
        assert!(Hypergraph::from_edges(6, 3, &[[1, 2, 3], [3, 2, 1]], 0).is_err());
        assert!(Hypergraph::from_edges(6, 3, &[[1, 1, 3]], 0).is_err());
        assert!(Hypergraph::from_edges(6, 3, &[[1, 2, 7]], 0).is_err());
        assert!(Hypergraph::from_edges(6, 3, &[[0, 2, 3]], 0).is_err());
        assert!(Hypergraph::from_edges(6, 3, &[vec![1, 2]], 0).is_err());
    }

    #[test]
    fn incidence_lists_members() {
        let h = Hypergraph::from_edges(6, 3, &[[1, 2, 3], [3, 4, 5]], 0).unwrap();
        let inc = h.incidence();
        assert_eq!(inc.edges_of(3), &[0, 1]);
        assert_eq!(inc.edges_of(1), &[0]);
        assert!(inc.edges_of(6).is_empty());
        for v in 1..=6 {
            for e in 0..h.edge_count() {
                assert_eq!(
                    inc.edges_of(v).contains(&(e as u32)),
                    h.edge(e).contains(&v)
                );
            }
        }
    }

    #[test]
    fn hgr_roundtrip() {
        let h = Hypergraph::from_edges(7, 3, &[[1, 2, 3], [2, 5, 7]], 99).unwrap();
        let mut buf = Vec::new();
        h.write_hgr(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "HGR v1 7 3 2 99\n1 2 3\n2 5 7\n"
        );
        let back = Hypergraph::read_hgr(buf.as_slice()).unwrap();
        assert_eq!(back, h);
        assert_eq!(back.seed(), 99);
    }

    #[test]
    fn hgr_reader_rejects_invalid() {
        let cases = [
            "",
            "HGR v2 5 3 0 0\n",
            "HGR v1 5 3 1 0\n",
            "HGR v1 5 3 1 0\n1 2\n",
            "HGR v1 5 3 1 0\n3 2 1\n",
            "HGR v1 5 3 1 0\n1 2 6\n",
            "HGR v1 5 3 2 0\n1 2 3\n1 2 3\n",
            "HGR v1 5 3 1 0\n1 2 3\n1 2 4\n",
            "HGR v1 5 3 1 0\n1 x 3\n",
        ];
        for text in cases {
            assert!(
                Hypergraph::read_hgr(text.as_bytes()).is_err(),
                "accepted {text:?}"
            );
        }
    }

    #[test]
    fn codec_falls_back_when_wide() {
        let narrow = EdgeCodec::new(100_000, 3);
        assert!(matches!(narrow.encode(&[1, 2, 3]), EdgeKey::Packed(_)));
        let wide = EdgeCodec::new(u32::MAX as u64, 5);
        assert!(matches!(wide.encode(&[1, 2, 3, 4, 5]), EdgeKey::Wide(_)));
        assert_ne!(narrow.encode(&[1, 2, 3]), narrow.encode(&[1, 2, 4]));
    }
}
