//! Connected-component structure of a realized hypergraph.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hypergraph::Hypergraph;

/// Disjoint sets with path halving and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        true
    }

    pub fn size_of(&mut self, x: u32) -> u32 {
        let r = self.find(x);
        self.size[r as usize]
    }

    /// Sizes of all sets, in order of their root index.
    pub fn root_sizes(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.parent.len())
            .filter(|&v| self.parent[v] as usize == v)
            .map(|v| self.size[v])
    }
}

fn join_edges(h: &Hypergraph) -> DisjointSets {
    let mut sets = DisjointSets::new(h.n() as usize);
    for edge in h.edges() {
        let head = edge[0] - 1;
        for &v in &edge[1..] {
            sets.union(head, v - 1);
        }
    }
    sets
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentSummary {
    /// Component sizes, largest first.
    pub sizes: Vec<u32>,
    pub l1: u32,
    /// Second-largest size, 0 with fewer than two components.
    pub l2: u32,
    pub count: usize,
}

impl ComponentSummary {
    /// `(size, count)` pairs in ascending size.
    pub fn histogram(&self) -> Vec<(u32, usize)> {
        let mut out: Vec<(u32, usize)> = Vec::new();
        for &s in self.sizes.iter().rev() {
            match out.last_mut() {
                Some((size, count)) if *size == s => *count += 1,
                _ => out.push((s, 1)),
            }
        }
        out
    }

    pub fn write_histogram_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "size,count")?;
        for (size, count) in self.histogram() {
            writeln!(out, "{size},{count}")?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn connected_components(h: &Hypergraph) -> ComponentSummary {
    let sets = join_edges(h);
    let mut sizes: Vec<u32> = sets.root_sizes().collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    ComponentSummary {
        l1: sizes.first().copied().unwrap_or(0),
        l2: sizes.get(1).copied().unwrap_or(0),
        count: sizes.len(),
        sizes,
    }
}

/// `|C_≤k|`: vertices in the union of the components of vertices `1..=k`.
pub fn component_of_set(h: &Hypergraph, k: u32) -> Result<u32> {
    if k == 0 || k > h.n() {
        return invalid("k", format!("{k} must lie in 1..={}", h.n()));
    }
    let mut sets = join_edges(h);
    Ok(union_size(&mut sets, k))
}

fn union_size(sets: &mut DisjointSets, k: u32) -> u32 {
    let mut roots: Vec<u32> = (0..k).map(|v| sets.find(v)).collect();
    roots.sort_unstable();
    roots.dedup();
    roots.iter().map(|&r| sets.size[r as usize]).sum()
}

/// `(|C_max|, |C_≤k|)` from a single union-find pass.
pub fn giant_and_seed_union(h: &Hypergraph, k: u32) -> Result<(u32, u32)> {
    if k == 0 || k > h.n() {
        return invalid("k", format!("{k} must lie in 1..={}", h.n()));
    }
    let mut sets = join_edges(h);
    let l1 = sets.root_sizes().max().unwrap_or(0);
    Ok((l1, union_size(&mut sets, k)))
}
