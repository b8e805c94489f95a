//! Deterministic search machinery over products of probability simplices.
//!
//! The global phase evaluates an objective on the integer lattice
//! `{k / n : sum k = n}` of each simplex. The local phase is a pattern
//! search whose moves transfer mass between two cells of the same simplex
//! block, so every iterate stays feasible. Results never depend on thread
//! scheduling: reductions order candidates by `(value desc, index asc)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Search settings shared by every optimizer in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Lattice points per simplex axis (the lattice step is `1 / (grid_resolution - 1)`).
    pub grid_resolution: usize,
    /// Number of shrink-and-refine rounds around each incumbent.
    pub refine_iterations: usize,
    /// Step multiplier applied after every refinement round.
    pub refine_shrink: f64,
    /// Recorded in reports; every search is deterministic.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            grid_resolution: 101,
            refine_iterations: 6,
            refine_shrink: 0.5,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn with_grid(grid_resolution: usize) -> Self {
        Self {
            grid_resolution,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_resolution < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid_resolution must be at least 2, got {}",
                self.grid_resolution
            )));
        }
        if !(self.refine_shrink > 0.0 && self.refine_shrink < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "refine_shrink must lie in (0,1), got {}",
                self.refine_shrink
            )));
        }
        Ok(())
    }

    /// Number of lattice subdivisions per simplex axis.
    pub fn subdivisions(&self) -> u32 {
        (self.grid_resolution.max(2) - 1) as u32
    }

    pub fn refine_settings(&self) -> RefineSettings {
        RefineSettings {
            initial_step: 1.0 / self.subdivisions() as f64,
            rounds: self.refine_iterations,
            shrink: self.refine_shrink,
            ..RefineSettings::default()
        }
    }
}

/// All integer compositions of `total` into `parts` non-negative parts, in
/// lexicographic order, stored flat with stride `parts`.
#[derive(Debug, Clone)]
pub struct SimplexLattice {
    parts: usize,
    total: u32,
    flat: Vec<u32>,
}

impl SimplexLattice {
    pub fn new(parts: usize, total: u32) -> Self {
        assert!(parts >= 1);
        let mut flat = Vec::new();
        let mut prefix = Vec::with_capacity(parts);
        fill(parts, total, &mut prefix, &mut flat);
        Self { parts, total, flat }
    }

    pub fn len(&self) -> usize {
        self.flat.len() / self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn parts(&self) -> usize {
        self.parts
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn counts(&self, i: usize) -> &[u32] {
        &self.flat[i * self.parts..(i + 1) * self.parts]
    }

    /// Lattice point `i` scaled to a block of total mass `mass`.
    pub fn point(&self, i: usize, mass: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.parts];
        self.write_point(i, mass, &mut out);
        out
    }

    /// Writes lattice point `i` (scaled to `mass`) into `out`.
    #[inline]
    pub fn write_point(&self, i: usize, mass: f64, out: &mut [f64]) {
        // the single point of an empty lattice is the zero vector
        let n = self.total.max(1) as f64;
        for (o, &k) in out.iter_mut().zip(self.counts(i)) {
            *o = mass * k as f64 / n;
        }
    }
}

fn fill(parts: usize, remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<u32>) {
    if parts == 1 {
        out.extend_from_slice(prefix);
        out.push(remaining);
        return;
    }
    for a in 0..=remaining {
        prefix.push(a);
        fill(parts - 1, remaining - a, prefix, out);
        prefix.pop();
    }
}

/// Number of lattice points `C(total + parts - 1, parts - 1)`.
pub fn lattice_size(parts: usize, total: u32) -> u64 {
    let n = total as u64 + parts as u64 - 1;
    let k = (parts as u64 - 1).min(total as u64);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// A candidate produced by a scan: value and lattice index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub value: f64,
    pub index: usize,
}

impl Scored {
    /// Total order used everywhere: larger value first, then smaller index.
    #[inline]
    pub fn beats(&self, other: &Scored) -> bool {
        self.value > other.value || (self.value == other.value && self.index < other.index)
    }
}

/// Keeps the `k` best candidates under [`Scored::beats`].
#[derive(Debug, Clone)]
pub struct TopK {
    k: usize,
    items: Vec<Scored>,
}

impl TopK {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    pub fn push(&mut self, s: Scored) {
        if s.value.is_nan() {
            return;
        }
        if self.items.len() == self.k {
            if let Some(last) = self.items.last() {
                if !s.beats(last) {
                    return;
                }
            }
        }
        let pos = self.items.iter().position(|x| s.beats(x)).unwrap_or(self.items.len());
        self.items.insert(pos, s);
        self.items.truncate(self.k);
    }

    pub fn merge(&mut self, other: TopK) {
        for s in other.items {
            self.push(s);
        }
    }

    pub fn into_vec(self) -> Vec<Scored> {
        self.items
    }
}

const CHUNK: usize = 4096;

/// Evaluates `eval(state, i)` for every `i < count` and returns the `k` best.
///
/// `init` builds per-worker scratch state.
pub fn scan_top_k<S, I, F>(count: usize, k: usize, init: I, eval: F) -> Vec<Scored>
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> f64 + Sync + Send,
{
    let chunks = count.div_ceil(CHUNK);
    let partial: Vec<TopK> = (0..chunks)
        .into_par_iter()
        .map_init(&init, |state, c| {
            let mut top = TopK::new(k);
            for i in c * CHUNK..((c + 1) * CHUNK).min(count) {
                top.push(Scored {
                    value: eval(state, i),
                    index: i,
                });
            }
            top
        })
        .collect();
    let mut top = TopK::new(k);
    for p in partial {
        top.merge(p);
    }
    top.into_vec()
}

/// Pattern-search settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineSettings {
    pub initial_step: f64,
    /// Shrink rounds at the configured schedule.
    pub rounds: usize,
    pub shrink: f64,
    /// After the configured rounds the step keeps shrinking until it falls below this.
    pub polish_floor: f64,
    /// Try pairs of transfers when no single transfer improves.
    pub pair_moves: bool,
    pub max_steps_per_round: usize,
    /// Hard cap on objective evaluations; the search stops once it is spent.
    pub max_evaluations: usize,
}

impl Default for RefineSettings {
    fn default() -> Self {
        Self {
            initial_step: 0.01,
            rounds: 6,
            shrink: 0.5,
            polish_floor: 1e-10,
            pair_moves: true,
            max_steps_per_round: 2000,
            max_evaluations: usize::MAX,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Transfer {
    to: usize,
    from: usize,
}

fn transfers(blocks: &[usize]) -> Vec<Transfer> {
    let mut moves = Vec::new();
    let mut offset = 0;
    for &size in blocks {
        for to in offset..offset + size {
            for from in offset..offset + size {
                if to != from {
                    moves.push(Transfer { to, from });
                }
            }
        }
        offset += size;
    }
    moves
}

#[inline]
fn apply(x: &mut [f64], m: Transfer, h: f64) -> Option<(f64, f64)> {
    let t = h.min(x[m.from]);
    if t <= 0.0 {
        return None;
    }
    let saved = (x[m.to], x[m.from]);
    x[m.from] -= t;
    x[m.to] += t;
    Some(saved)
}

#[inline]
fn undo(x: &mut [f64], m: Transfer, saved: (f64, f64)) {
    x[m.to] = saved.0;
    x[m.from] = saved.1;
}

/// Maximizes `obj` from `start` by mass-transfer pattern search.
///
/// `blocks` lists the sizes of the simplex blocks that make up the point;
/// transfers never cross block boundaries, so each block keeps its total.
/// Returns the best value and point. The returned value is `obj` evaluated
/// at the returned point.
pub fn pattern_refine<F>(
    start: Vec<f64>,
    blocks: &[usize],
    settings: &RefineSettings,
    mut obj: F,
) -> (f64, Vec<f64>)
where
    F: FnMut(&[f64]) -> f64,
{
    debug_assert_eq!(blocks.iter().sum::<usize>(), start.len());
    let moves = transfers(blocks);
    let mut x = start;
    let evaluations = std::cell::Cell::new(0usize);
    let mut obj = |p: &[f64]| {
        evaluations.set(evaluations.get() + 1);
        obj(p)
    };
    let mut best = obj(&x);
    let mut h = settings.initial_step;
    let mut round = 0usize;
    let spent = || evaluations.get() >= settings.max_evaluations;
    while h > 0.0 && (round < settings.rounds || h >= settings.polish_floor) && !spent() {
        for _ in 0..settings.max_steps_per_round {
            if spent() {
                break;
            }
            let mut chosen: Option<(Transfer, Option<Transfer>)> = None;
            let mut chosen_value = best;
            for &m in &moves {
                if let Some(saved) = apply(&mut x, m, h) {
                    let v = obj(&x);
                    undo(&mut x, m, saved);
                    if v > chosen_value {
                        chosen_value = v;
                        chosen = Some((m, None));
                    }
                }
            }
            if chosen.is_none() && settings.pair_moves {
                for (a, &m1) in moves.iter().enumerate() {
                    for &m2 in &moves[a + 1..] {
                        if m1.to == m2.from && m1.from == m2.to {
                            continue;
                        }
                        let Some(s1) = apply(&mut x, m1, h) else {
                            continue;
                        };
                        if let Some(s2) = apply(&mut x, m2, h) {
                            let v = obj(&x);
                            undo(&mut x, m2, s2);
                            if v > chosen_value {
                                chosen_value = v;
                                chosen = Some((m1, Some(m2)));
                            }
                        }
                        undo(&mut x, m1, s1);
                    }
                }
            }
            match chosen {
                Some((m1, m2)) => {
                    apply(&mut x, m1, h);
                    if let Some(m2) = m2 {
                        apply(&mut x, m2, h);
                    }
                    best = obj(&x);
                }
                None => break,
            }
        }
        h *= settings.shrink;
        round += 1;
    }
    (best, x)
}

/// Maximizes a concave function on `[0, 1]` by golden-section search.
///
/// Returns `(argmax, value)`. The endpoints are always compared, so maxima on
/// the boundary are found exactly.
pub fn maximize_concave_unit<F: FnMut(f64) -> f64>(mut f: F) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..80 {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for t in [0.0, 1.0] {
        let v = f(t);
        if v > best.1 {
            best = (t, v);
        }
    }
    best
}
