use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{c_matrix, c_matrix_from_rates, g_map, AffineMap3, Chart, SigmaChoice};
use crate::chipper::{ChipSequence, LineageNode, RatePolicy};
use crate::dimension::{log_phi_from_log_sv, SingularTriple};
use crate::polytope::VertexId;
use crate::{Error, Mat3, Result, Vec3};

/// A chain `j_0, j_1, ..., j_n` where each vertex is the mother of the next.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotherSeq {
    pub chain: Vec<VertexId>,
}

impl MotherSeq {
    pub fn new(chain: Vec<VertexId>) -> Result<Self> {
        let s = Self { chain };
        s.validate()?;
        Ok(s)
    }

    /// The chain from `root` following storage slots `letters`.
    pub fn from_letters(root: u64, letters: &[u8]) -> Self {
        let mut chain = Vec::with_capacity(letters.len() + 1);
        let mut code = root;
        chain.push(VertexId::new(0, code));
        for (k, &t) in letters.iter().enumerate() {
            code = 3 * code + t as u64;
            chain.push(VertexId::new(k as u32 + 1, code));
        }
        Self { chain }
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .chain
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty mother sequence".into()))?;
        if first.generation != 0 {
            return Err(Error::InvalidParameter(format!("mother sequence starts at {first}")));
        }
        for w in self.chain.windows(2) {
            if w[1].mother() != Some(w[0]) {
                return Err(Error::InvalidParameter(format!("{} is not the mother of {}", w[0], w[1])));
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.chain.len() - 1
    }

    pub fn root(&self) -> VertexId {
        self.chain[0]
    }

    pub fn last(&self) -> VertexId {
        *self.chain.last().expect("non-empty chain")
    }

    /// Storage slots taken at each step.
    pub fn letters(&self) -> Vec<u8> {
        self.chain[1..].iter().map(|v| (v.code % 3) as u8).collect()
    }
}

/// A mother sequence with its accumulated matrices and composed map.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixWord {
    pub seq: MotherSeq,
    /// `C_{j_1} ⋯ C_{j_n}`.
    pub c: Mat3,
    /// `Λ_{j_0}⁻¹ C Λ_{j_n}`.
    pub b: Mat3,
    /// `G_{j_0 j_1} ∘ ⋯ ∘ G_{j_{n-1} j_n}`.
    pub g: AffineMap3,
    pub depth: usize,
}

impl MatrixWord {
    /// The empty word at `root`: all matrices are the identity.
    pub fn identity(root: VertexId) -> Self {
        Self {
            seq: MotherSeq { chain: vec![root] },
            c: Mat3::identity(),
            b: Mat3::identity(),
            g: AffineMap3::identity(),
            depth: 0,
        }
    }

    /// Column-sum norm of `C`.
    pub fn c_norm1(&self) -> f64 {
        norm1(&self.c)
    }
}

pub(crate) fn norm1(m: &Mat3) -> f64 {
    (0..3).map(|j| m.column(j).abs().sum()).fold(0.0, f64::max)
}

/// Tolerance for cross-checks of composed maps at a given depth.
pub(crate) fn composition_tolerance(depth: usize) -> f64 {
    let extra = depth.saturating_sub(10).div_ceil(5) as i32;
    1e-10 * 10f64.powi(extra)
}

/// Builds a word from materialised charts by composing the one-step maps,
/// and cross-checks the result against the closed-form sum.
pub fn compose_word(seq: &MotherSeq, charts: &[Chart], chips: &ChipSequence) -> Result<MatrixWord> {
    seq.validate()?;
    let n = seq.depth();
    if charts.len() <= n || chips.depth() < n {
        return Err(Error::DepthExceeded {
            requested: n,
            available: (charts.len().saturating_sub(1)).min(chips.depth()),
        });
    }
    let mut g = AffineMap3::identity();
    let mut c = Mat3::identity();
    let mut offset = Vec3::zeros();
    for k in 0..n {
        let child = seq.chain[k + 1];
        let step = g_map(&charts[k], &charts[k + 1], chips, child)?;
        g = g.compose(&step);
        let ck = c_matrix(chips, &charts[k + 1], child)?;
        let sib = charts[k + 1].sigma_slot_of(child.code as u32, (child.code % 3) as usize);
        let vcode = (child.code / 3) as u32;
        let p = chips.rates(k).get(vcode, (child.code % 3) as usize);
        let mut e = Vec3::zeros();
        e[sib] = p;
        offset += c * e;
        c *= ck;
    }
    let root = seq.root().code as u32;
    let leaf = seq.last().code as u32;
    let inv0 = charts[0].scale_inverse(root);
    let b = inv0 * c * charts[n].scale(leaf);
    let closed = AffineMap3::new(b, inv0 * offset);
    let err = closed.distance_on_reference(&g);
    if err > composition_tolerance(n) {
        return Err(Error::Inconsistent(format!(
            "composed and closed-form maps differ by {err:e} at depth {n}"
        )));
    }
    Ok(MatrixWord {
        seq: seq.clone(),
        c,
        b,
        g,
        depth: n,
    })
}

/// A subtree skipped during enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrunedSubtree {
    pub depth: usize,
    /// Log singular values of the prefix product.
    pub log_sv: [f64; 3],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnumStats {
    pub words: u64,
    pub pruned: Vec<PrunedSubtree>,
}

impl EnumStats {
    /// Upper bound on what the pruned subtrees would add to the depth-`n`
    /// sum of φˢ(C), given that every one-step matrix has column-sum norm
    /// at most `1 - margin`.
    pub fn pruned_mass_bound(&self, n: usize, s: f64, margin: f64) -> f64 {
        let rest = |d: usize| {
            let k = n - d;
            3f64.powi(k as i32) * (3f64.sqrt() * (1.0 - margin).powi(k as i32)).powf(s)
        };
        self.pruned
            .iter()
            .map(|p| log_phi_from_log_sv(&p.log_sv, s).exp() * rest(p.depth))
            .sum()
    }
}

/// Rates at one lineage node: outgoing rates by storage slot and the
/// matching reverse rates.
#[derive(Debug, Clone, Copy)]
struct NodeRates {
    out: [f64; 3],
    rev: [f64; 3],
}

/// Mother sequences of a run, generated from the genealogy keys alone.
///
/// Nothing beyond generation 0 is materialised, so depth is limited only
/// by time. Rates come from the run's policy, so they agree with the
/// materialised [`ChipSequence`] wherever both exist.
#[derive(Debug, Clone)]
pub struct WordSpace {
    policy: RatePolicy,
    roots: Vec<LineageNode>,
    slots: Vec<[u8; 3]>,
    lambda_tol: f64,
}

impl WordSpace {
    pub fn new(seq: &ChipSequence, sigma: SigmaChoice) -> Self {
        let p0 = seq.poly(0);
        Self {
            policy: seq.policy().clone(),
            roots: seq.roots(),
            slots: (0..p0.vertex_count() as u32).map(|v| sigma.slots(p0, v)).collect(),
            lambda_tol: 1e-13,
        }
    }

    pub fn with_lambda_tol(mut self, tol: f64) -> Self {
        self.lambda_tol = tol;
        self
    }

    pub fn root_count(&self) -> usize {
        self.roots.len()
    }

    pub fn policy(&self) -> &RatePolicy {
        &self.policy
    }

    fn node_rates(&self, node: &LineageNode) -> Result<NodeRates> {
        let mut r = NodeRates {
            out: [0.0; 3],
            rev: [0.0; 3],
        };
        for m in 0..3 {
            r.out[m] = node.rate(m, &self.policy)?;
            r.rev[m] = node.reverse_rate(m, &self.policy)?;
        }
        Ok(r)
    }

    /// `(C, translation contribution e_sib * p)` for the child through slot `t`.
    fn step(&self, slots: [u8; 3], r: &NodeRates, t: usize) -> (Mat3, Vec3) {
        let sib = slots.iter().position(|&s| s as usize == t).expect("permutation");
        let cousins = slots.map(|s| r.out[s as usize]);
        let c = c_matrix_from_rates(sib, r.out[t], r.rev[t], cousins);
        let mut e = Vec3::zeros();
        e[sib] = r.out[t];
        (c, e)
    }

    fn chart_rates(&self, node: &LineageNode, slots: [u8; 3]) -> Result<[f64; 3]> {
        let mut l = [0.0; 3];
        for k in 0..3 {
            l[k] = node.lambda(slots[k] as usize, &self.policy, self.lambda_tol)?;
        }
        Ok(l)
    }

    fn finish(&self, root: usize, leaf: &LineageNode, c: Mat3, offset: Vec3, chain: Vec<VertexId>, root_lambda: [f64; 3]) -> Result<MatrixWord> {
        let slots = self.slots[root];
        let inv0 = Mat3::from_diagonal(&Vec3::from(root_lambda.map(|l| 1.0 / l)));
        let leaf_l = Mat3::from_diagonal(&Vec3::from(self.chart_rates(leaf, slots)?));
        let b = inv0 * c * leaf_l;
        let depth = chain.len() - 1;
        Ok(MatrixWord {
            seq: MotherSeq { chain },
            c,
            b,
            g: AffineMap3::new(b, inv0 * offset),
            depth,
        })
    }

    /// The word from root `root` following storage slots `letters`.
    pub fn word(&self, root: usize, letters: &[u8]) -> Result<MatrixWord> {
        let slots = self.slots[root];
        let mut node = self.roots[root];
        let mut c = Mat3::identity();
        let mut offset = Vec3::zeros();
        let mut chain = vec![node.id()];
        for &t in letters {
            let t = t as usize;
            if t > 2 {
                return Err(Error::InvalidParameter(format!("slot {t} out of range")));
            }
            let r = self.node_rates(&node)?;
            let (ck, e) = self.step(slots, &r, t);
            offset += c * e;
            c *= ck;
            node = node.child(t);
            chain.push(node.id());
        }
        let root_lambda = self.chart_rates(&self.roots[root], slots)?;
        self.finish(root, &node, c, offset, chain, root_lambda)
    }

    /// A uniformly random word of the given depth.
    pub fn sample(&self, depth: usize, rng: &mut impl Rng) -> Result<MatrixWord> {
        let root = rng.random_range(0..self.roots.len());
        let letters: Vec<u8> = (0..depth).map(|_| rng.random_range(0..3u8)).collect();
        self.word(root, &letters)
    }

    /// All words of depth `n`, depth first; with `prune`, subtrees whose
    /// prefix has top singular value below the threshold are skipped.
    pub fn words(&self, n: usize, prune: Option<f64>) -> WordIter<'_> {
        WordIter {
            space: self,
            target: n,
            prune,
            next_root: 0,
            root_lambda: [0.0; 3],
            stack: Vec::new(),
            chain: Vec::new(),
            stats: EnumStats::default(),
        }
    }

    /// Log singular values of `C` for every word at each requested depth,
    /// from one depth-first pass. Entry `k` of the result matches `depths[k]`.
    pub fn log_singular_values(&self, depths: &[usize]) -> Result<Vec<Vec<[f64; 3]>>> {
        let max = depths.iter().copied().max().unwrap_or(0);
        let mut want = vec![usize::MAX; max + 1];
        for (k, &d) in depths.iter().enumerate() {
            want[d] = k;
        }
        let mut out: Vec<Vec<[f64; 3]>> = depths
            .iter()
            .map(|&d| Vec::with_capacity(self.roots.len() * 3usize.pow(d as u32)))
            .collect();
        struct Frame {
            node: LineageNode,
            c: Mat3,
            rates: Option<NodeRates>,
            next: u8,
            depth: usize,
        }
        for (ri, root) in self.roots.iter().enumerate() {
            let slots = self.slots[ri];
            let mut stack = vec![Frame {
                node: *root,
                c: Mat3::identity(),
                rates: None,
                next: 0,
                depth: 0,
            }];
            if want[0] != usize::MAX {
                out[want[0]].push([0.0; 3]);
            }
            while let Some(top) = stack.last_mut() {
                if top.depth == max || top.next == 3 {
                    stack.pop();
                    continue;
                }
                if top.rates.is_none() {
                    top.rates = Some(self.node_rates(&top.node)?);
                }
                let t = top.next as usize;
                top.next += 1;
                let (ck, _) = self.step(slots, top.rates.as_ref().expect("set above"), t);
                let c = top.c * ck;
                let depth = top.depth + 1;
                let node = top.node.child(t);
                if want[depth] != usize::MAX {
                    out[want[depth]].push(SingularTriple::of(&c).logs());
                }
                stack.push(Frame {
                    node,
                    c,
                    rates: None,
                    next: 0,
                    depth,
                });
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
struct IterFrame {
    node: LineageNode,
    c: Mat3,
    offset: Vec3,
    rates: Option<NodeRates>,
    next: u8,
}

/// Depth-first stream of words with an explicit stack.
pub struct WordIter<'a> {
    space: &'a WordSpace,
    target: usize,
    prune: Option<f64>,
    next_root: usize,
    root_lambda: [f64; 3],
    stack: Vec<IterFrame>,
    chain: Vec<VertexId>,
    stats: EnumStats,
}

impl WordIter<'_> {
    /// Counts so far; complete once the iterator is exhausted.
    pub fn stats(&self) -> &EnumStats {
        &self.stats
    }

    fn current_root(&self) -> usize {
        self.next_root - 1
    }

    fn advance(&mut self) -> Result<Option<MatrixWord>> {
        loop {
            if self.stack.is_empty() {
                if self.next_root >= self.space.roots.len() {
                    return Ok(None);
                }
                let r = self.next_root;
                self.next_root += 1;
                let node = self.space.roots[r];
                self.root_lambda = self.space.chart_rates(&node, self.space.slots[r])?;
                self.chain = vec![node.id()];
                self.stack.push(IterFrame {
                    node,
                    c: Mat3::identity(),
                    offset: Vec3::zeros(),
                    rates: None,
                    next: 0,
                });
            }
            let depth = self.stack.len() - 1;
            if depth == self.target {
                let f = self.stack.pop().expect("non-empty");
                let chain = self.chain.clone();
                self.chain.pop();
                self.stats.words += 1;
                let w = self.space.finish(self.current_root(), &f.node, f.c, f.offset, chain, self.root_lambda)?;
                return Ok(Some(w));
            }
            let slots = self.space.slots[self.current_root()];
            let top = self.stack.last_mut().expect("non-empty");
            if top.next == 3 {
                self.stack.pop();
                self.chain.pop();
                continue;
            }
            if top.rates.is_none() {
                top.rates = Some(self.space.node_rates(&top.node)?);
            }
            let t = top.next as usize;
            top.next += 1;
            let (ck, e) = self.space.step(slots, top.rates.as_ref().expect("set above"), t);
            let offset = top.offset + top.c * e;
            let c = top.c * ck;
            let node = top.node.child(t);
            if let Some(th) = self.prune {
                let sv = SingularTriple::of(&c);
                if sv.a1 < th {
                    self.stats.pruned.push(PrunedSubtree {
                        depth: depth + 1,
                        log_sv: sv.logs(),
                    });
                    continue;
                }
            }
            self.chain.push(node.id());
            self.stack.push(IterFrame {
                node,
                c,
                offset,
                rates: None,
                next: 0,
            });
        }
    }
}

impl Iterator for WordIter<'_> {
    type Item = Result<MatrixWord>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.advance() {
            Ok(Some(w)) => Some(Ok(w)),
            Ok(None) => None,
            Err(e) => {
                // Stop after reporting the error.
                self.stack.clear();
                self.next_root = self.space.roots.len();
                Some(Err(e))
            }
        }
    }
}

/// One CSV row per word: depth, chain ids joined by `;`, the nine entries
/// of `C` and of `B` (row-major) and the singular values of `C`.
pub fn write_words_csv<'a>(w: impl Write, words: impl IntoIterator<Item = &'a MatrixWord>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["depth".to_string(), "chain".to_string()];
    for m in ["c", "b"] {
        for i in 0..3 {
            for j in 0..3 {
                header.push(format!("{m}{i}{j}"));
            }
        }
    }
    header.extend(["sv1", "sv2", "sv3"].map(String::from));
    out.write_record(&header)?;
    for word in words {
        let mut row = vec![
            word.depth.to_string(),
            word.seq.chain.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";"),
        ];
        for m in [&word.c, &word.b] {
            for i in 0..3 {
                for j in 0..3 {
                    row.push(format!("{:.17e}", m[(i, j)]));
                }
            }
        }
        let sv = SingularTriple::of(&word.c);
        row.extend([sv.a1, sv.a2, sv.a3].map(|x| format!("{x:.17e}")));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::chart_sequence;
    use crate::chipper::chip_sequence;
    use crate::polytope::{make_seed, SeedShape};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn run(policy: RatePolicy, depth: usize) -> ChipSequence {
        chip_sequence(&make_seed(SeedShape::Cube), &policy, depth, 21).unwrap()
    }

    #[test]
    fn word_counts() {
        let seq = run(RatePolicy::constant(0.25).unwrap(), 0);
        let ws = WordSpace::new(&seq, SigmaChoice::Sorted);
        assert_eq!(ws.words(3, None).count(), 216);
        let tet = chip_sequence(&make_seed(SeedShape::Tetrahedron), &RatePolicy::constant(0.25).unwrap(), 0, 0).unwrap();
        assert_eq!(WordSpace::new(&tet, SigmaChoice::Sorted).words(1, None).count(), 12);
        let logs = ws.log_singular_values(&[0, 2, 3]).unwrap();
        assert_eq!(logs.iter().map(|l| l.len()).collect::<Vec<_>>(), vec![8, 72, 216]);
    }

    #[test]
    fn zero_threshold_prunes_nothing() {
        let seq = run(RatePolicy::uniform(0.05, 0.4).unwrap(), 0);
        let ws = WordSpace::new(&seq, SigmaChoice::Sorted);
        let a: Vec<MatrixWord> = ws.words(3, None).map(|w| w.unwrap()).collect();
        let mut it = ws.words(3, Some(0.0));
        let b: Vec<MatrixWord> = it.by_ref().map(|w| w.unwrap()).collect();
        assert_eq!(a, b);
        assert!(it.stats().pruned.is_empty());
    }

    #[test]
    fn pruning_accounts_for_skipped_words() {
        let seq = run(RatePolicy::uniform(0.05, 0.4).unwrap(), 0);
        let ws = WordSpace::new(&seq, SigmaChoice::Sorted);
        let n = 4;
        let th = 0.2;
        let mut it = ws.words(n, Some(th));
        let kept: Vec<MatrixWord> = it.by_ref().map(|w| w.unwrap()).collect();
        let stats = it.stats().clone();
        let skipped: u64 = stats.pruned.iter().map(|p| 3u64.pow((n - p.depth) as u32)).sum();
        assert_eq!(kept.len() as u64 + skipped, 8 * 81);
        // The bound covers the true contribution of the skipped words.
        let s = 1.3;
        let all: f64 = ws
            .words(n, None)
            .map(|w| SingularTriple::of(&w.unwrap().c).phi(s))
            .sum();
        let got: f64 = kept.iter().map(|w| SingularTriple::of(&w.c).phi(s)).sum();
        assert!(all - got <= stats.pruned_mass_bound(n, s, ws.policy().margin()) * (1.0 + 1e-12));
    }

    #[test]
    fn streaming_words_match_materialised_composition() {
        let seq = run(RatePolicy::uniform(0.05, 0.4).unwrap(), 4);
        let charts = chart_sequence(&seq, SigmaChoice::Reversed, 1e-13).unwrap();
        let ws = WordSpace::new(&seq, SigmaChoice::Reversed);
        for w in ws.words(4, None).step_by(7) {
            let w = w.unwrap();
            let m = compose_word(&w.seq, &charts, &seq).unwrap();
            assert!((m.c - w.c).amax() < 1e-14);
            assert!((m.b - w.b).amax() < 1e-10);
            assert!(m.g.distance_on_reference(&w.g) < 1e-10);
        }
    }

    #[test]
    fn depth_zero_word_is_identity() {
        let seq = run(RatePolicy::constant(0.25).unwrap(), 1);
        let charts = chart_sequence(&seq, SigmaChoice::Sorted, 1e-13).unwrap();
        let w = compose_word(&MotherSeq::from_letters(3, &[]), &charts, &seq).unwrap();
        assert_eq!(w.c, Mat3::identity());
        assert!((w.b - Mat3::identity()).amax() < 1e-12);
        assert!(w.g.distance_on_reference(&AffineMap3::identity()) < 1e-12);
    }

    #[test]
    fn constant_rate_norm_bound() {
        let p = 0.3;
        let seq = run(RatePolicy::constant(p).unwrap(), 0);
        let ws = WordSpace::new(&seq, SigmaChoice::Sorted);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let n = rng.random_range(0..9);
            let w = ws.sample(n, &mut rng).unwrap();
            // Column sums of each factor are 1 - 2p and 2p.
            assert!(w.c_norm1() <= (2.0 * p).powi(n as i32) * (1.0 + 1e-12));
            let binv = w.b.try_inverse().unwrap();
            assert!(binv.iter().all(|&x| x >= -1e-12));
        }
    }

    #[test]
    fn mother_seq_validation() {
        let ok = MotherSeq::from_letters(2, &[1, 0, 2]);
        assert!(ok.validate().is_ok());
        assert_eq!(ok.letters(), vec![1, 0, 2]);
        assert_eq!(ok.last(), VertexId::new(3, ((2 * 3 + 1) * 3) * 3 + 2));
        let bad = MotherSeq {
            chain: vec![VertexId::new(0, 1), VertexId::new(1, 7)],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn csv_export_has_one_row_per_word() {
        let seq = run(RatePolicy::constant(0.25).unwrap(), 0);
        let ws = WordSpace::new(&seq, SigmaChoice::Sorted);
        let words: Vec<MatrixWord> = ws.words(1, None).map(|w| w.unwrap()).collect();
        let mut buf = Vec::new();
        write_words_csv(&mut buf, &words).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 25);
        assert!(text.lines().next().unwrap().starts_with("depth,chain,c00"));
    }
}
