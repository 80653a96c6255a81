use super::rates::{child_key, root_key};
use super::{chip, ChipRates, LineageNode, RatePolicy};
use crate::polytope::Polyhedron;
use crate::{Error, Result};

/// A chipping run: polyhedra `P_0..=P_n`, the rates used at each step and
/// the genealogy keys that determine rates of any later generation.
#[derive(Debug, Clone)]
pub struct ChipSequence {
    polys: Vec<Polyhedron>,
    rates: Vec<ChipRates>,
    keys: Vec<Vec<u64>>,
    policy: RatePolicy,
    seed: u64,
}

impl ChipSequence {
    /// Number of chipping steps performed.
    pub fn depth(&self) -> usize {
        self.polys.len() - 1
    }

    /// Generations for which rates are materialised (equal to `depth`).
    pub fn rate_generations(&self) -> usize {
        self.rates.len()
    }

    pub fn poly(&self, n: usize) -> &Polyhedron {
        &self.polys[n]
    }

    pub fn polys(&self) -> &[Polyhedron] {
        &self.polys
    }

    pub fn last(&self) -> &Polyhedron {
        self.polys.last().expect("sequence holds P_0")
    }

    /// Rates used to chip `P_n` into `P_{n+1}`.
    pub fn rates(&self, n: usize) -> &ChipRates {
        &self.rates[n]
    }

    pub fn policy(&self) -> &RatePolicy {
        &self.policy
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Lineage state of vertex `v` of generation `n`.
    pub fn lineage(&self, n: usize, v: u32) -> LineageNode {
        let p = &self.polys[n];
        let keys = &self.keys[n];
        let ns = p.neighbours(v);
        let mut node = LineageNode {
            generation: n as u32,
            code: v as u64,
            key: keys[v as usize],
            nbr_code: [0; 3],
            nbr_key: [0; 3],
            back: [0; 3],
        };
        for (m, &u) in ns.iter().enumerate() {
            node.nbr_code[m] = u as u64;
            node.nbr_key[m] = keys[u as usize];
            node.back[m] = p.slot_of(u, v).expect("symmetric adjacency") as u8;
        }
        node
    }

    /// The generation-0 lineage nodes.
    pub fn roots(&self) -> Vec<LineageNode> {
        (0..self.polys[0].vertex_count() as u32).map(|v| self.lineage(0, v)).collect()
    }

    /// Appends one more generation.
    pub fn extend(&mut self) -> Result<()> {
        let n = self.depth();
        let p = &self.polys[n];
        let keys = &self.keys[n];
        let mut values = Vec::with_capacity(3 * p.vertex_count());
        for v in 0..p.vertex_count() as u32 {
            for (m, &u) in p.neighbours(v).iter().enumerate() {
                let edge_key = child_key(keys[v as usize], m);
                values.push(self.policy.rate(n as u32, v as u64, u as u64, edge_key)?);
            }
        }
        let rates = ChipRates::from_values(p, values)?;
        let next = chip(p, &rates)?;
        let next_keys = (0..next.vertex_count())
            .map(|c| child_key(keys[c / 3], c % 3))
            .collect();
        self.rates.push(rates);
        self.polys.push(next);
        self.keys.push(next_keys);
        Ok(())
    }
}

/// Chips `p0` `n` times with rates drawn from `policy` under `seed`.
pub fn chip_sequence(p0: &Polyhedron, policy: &RatePolicy, n: usize, seed: u64) -> Result<ChipSequence> {
    policy.validate()?;
    if !p0.is_simple() {
        let v = (0..p0.vertex_count() as u32)
            .find(|&v| p0.neighbours(v).len() != 3)
            .unwrap_or(0);
        return Err(Error::NotSimple {
            vertex: v,
            degree: p0.neighbours(v).len(),
        });
    }
    let keys0 = (0..p0.vertex_count() as u64).map(|v| root_key(seed, v)).collect();
    let mut seq = ChipSequence {
        polys: vec![p0.clone()],
        rates: Vec::with_capacity(n),
        keys: vec![keys0],
        policy: policy.clone(),
        seed,
    };
    for _ in 0..n {
        seq.extend()?;
    }
    Ok(seq)
}
