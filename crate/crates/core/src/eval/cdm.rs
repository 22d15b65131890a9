//! Closest-distance edge-map similarity.
//!
//! Edge pixels of `f` and `g` within chessboard distance `eta` are matched
//! one-to-one. A matched pair costs `d / eta`, every unmatched edge pixel
//! costs 1, and the score is `100 * (1 - cost / |f ∪ g|)`.
//!
//! Pixels are grouped into connected components of the "within `eta`"
//! relation. Components of up to `EXACT_LIMIT` pixels get a minimum-cost
//! matching; larger ones are matched greedily, closest first, and then
//! improved by a bounded local search.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::image::EdgeImage;

pub const DEFAULT_ETA: u32 = 3;

/// Largest component, in f plus g pixels, solved exactly.
pub const EXACT_LIMIT: usize = 2048;

/// Longest move, in new pairs, tried by the local search.
const REPAIR_DEPTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CdmParams {
    pub eta: u32,
}

impl Default for CdmParams {
    fn default() -> Self {
        Self { eta: DEFAULT_ETA }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdmReport {
    pub score: f64,
    pub cost: f64,
    pub matched_pairs: usize,
    pub unmatched_f: usize,
    pub unmatched_g: usize,
    pub union_size: usize,
}

impl CdmReport {
    /// Single-line JSON record.
    pub fn to_json(&self) -> String {
        format!(
            "{{\"score\":{},\"cost\":{},\"matched_pairs\":{},\"unmatched_f\":{},\"unmatched_g\":{},\"union_size\":{}}}",
            self.score, self.cost, self.matched_pairs, self.unmatched_f, self.unmatched_g, self.union_size
        )
    }
}

pub fn chessboard(a: (u32, u32), b: (u32, u32)) -> u32 {
    a.0.abs_diff(b.0).max(a.1.abs_diff(b.1))
}

/// Cost of a matched pair at distance `d`.
pub fn pair_cost(d: u32, eta: u32) -> f64 {
    if d == 0 {
        0.0
    } else {
        d as f64 / eta as f64
    }
}

/// Saving of a matched pair against leaving both pixels unmatched, in
/// units of `1 / eta` so that it stays integral.
fn pair_gain(d: u32, eta: u32) -> i64 {
    if eta == 0 {
        2
    } else {
        2 * eta as i64 - d as i64
    }
}

/// Current matching: partner of every f pixel and of every g pixel.
struct Matching {
    f: Vec<Option<usize>>,
    g: Vec<Option<(usize, u32)>>,
}

impl Matching {
    fn unpair(&mut self, i: usize) {
        if let Some(j) = self.f[i].take() {
            self.g[j] = None;
        }
    }

    fn pair(&mut self, i: usize, j: usize, d: u32) {
        self.f[i] = Some(j);
        self.g[j] = Some((i, d));
    }
}

pub fn cdm(f: &EdgeImage, g: &EdgeImage, params: &CdmParams) -> Result<CdmReport> {
    if f.geometry() != g.geometry() {
        return Err(Error::GeometryMismatch {
            left: f.geometry().to_string(),
            right: g.geometry().to_string(),
        });
    }
    let geometry = f.geometry();
    let (w, h) = (geometry.width() as i64, geometry.height() as i64);
    let eta = params.eta as i64;

    let f_pixels = f.on_pixels();
    let g_pixels = g.on_pixels();
    let mut g_slot = vec![usize::MAX; geometry.pixel_count()];
    for (k, &(x, y)) in g_pixels.iter().enumerate() {
        g_slot[geometry.index(x, y)] = k;
    }

    // Neighbours of each f pixel as (distance, g slot), closest first.
    let mut adjacency: Vec<Vec<(u32, usize)>> = Vec::with_capacity(f_pixels.len());
    for &(px, py) in &f_pixels {
        let mut near = Vec::new();
        for dy in -eta..=eta {
            let y = py as i64 + dy;
            if y < 0 || y >= h {
                continue;
            }
            for dx in -eta..=eta {
                let x = px as i64 + dx;
                if x < 0 || x >= w || !g.get(x as u32, y as u32) {
                    continue;
                }
                near.push((dx.abs().max(dy.abs()) as u32, g_slot[(y * w + x) as usize]));
            }
        }
        near.sort_unstable();
        adjacency.push(near);
    }

    let small = small_components(&adjacency, g_pixels.len());
    let mut matching = Matching {
        f: vec![None; f_pixels.len()],
        g: vec![None; g_pixels.len()],
    };
    greedy(&adjacency, &small, &mut matching);
    repair(&adjacency, &small, &mut matching, params.eta);
    exact(&adjacency, &small, &mut matching, params.eta);

    let mut matched = 0usize;
    let mut cost = 0.0;
    for &(_, d) in matching.g.iter().flatten() {
        matched += 1;
        cost += pair_cost(d, params.eta);
    }
    let union_size = f
        .mask()
        .iter()
        .zip(g.mask())
        .filter(|(a, b)| **a || **b)
        .count();
    let unmatched_f = f_pixels.len() - matched;
    let unmatched_g = g_pixels.len() - matched;
    cost += (unmatched_f + unmatched_g) as f64;
    let score = if union_size == 0 {
        100.0
    } else {
        (100.0 * (1.0 - cost / union_size as f64)).clamp(0.0, 100.0)
    };
    Ok(CdmReport {
        score,
        cost,
        matched_pairs: matched,
        unmatched_f,
        unmatched_g,
        union_size,
    })
}

/// Flags the f pixels whose component has at most `EXACT_LIMIT` pixels.
fn small_components(adjacency: &[Vec<(u32, usize)>], g_count: usize) -> Vec<bool> {
    let nf = adjacency.len();
    let mut parent: Vec<usize> = (0..nf + g_count).collect();
    fn root(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    for (i, near) in adjacency.iter().enumerate() {
        for &(_, j) in near {
            let (a, b) = (root(&mut parent, i), root(&mut parent, nf + j));
            if a != b {
                parent[a] = b;
            }
        }
    }
    let mut size = vec![0usize; nf + g_count];
    for k in 0..nf + g_count {
        let r = root(&mut parent, k);
        size[r] += 1;
    }
    (0..nf).map(|i| size[root(&mut parent, i)] <= EXACT_LIMIT).collect()
}

/// Closest-first matching over `(distance, f pixel, g pixel)`, row-major, in
/// the large components.
fn greedy(adjacency: &[Vec<(u32, usize)>], small: &[bool], m: &mut Matching) {
    let mut pairs: Vec<(u32, usize, usize)> = adjacency
        .iter()
        .enumerate()
        .filter(|(i, _)| !small[*i])
        .flat_map(|(i, near)| near.iter().map(move |&(d, j)| (d, i, j)))
        .collect();
    pairs.sort_unstable();
    for (d, i, j) in pairs {
        if m.f[i].is_none() && m.g[j].is_none() {
            m.pair(i, j, d);
        }
    }
}

/// Minimum-cost matching of the small components by successive shortest
/// augmenting paths. Costs are negated gains, so a path is taken only while
/// it lowers the total.
fn exact(adjacency: &[Vec<(u32, usize)>], small: &[bool], m: &mut Matching, eta: u32) {
    let nf = adjacency.len();
    let ng = m.g.len();
    let mut dist_f = vec![i64::MAX; nf];
    let mut dist_g = vec![i64::MAX; ng];
    let mut pred_g = vec![usize::MAX; ng];
    let mut queued = vec![false; nf];
    let mut touched_f = Vec::new();
    let mut touched_g = Vec::new();
    loop {
        let mut queue = VecDeque::new();
        for i in (0..nf).filter(|&i| small[i] && m.f[i].is_none()) {
            dist_f[i] = 0;
            queued[i] = true;
            touched_f.push(i);
            queue.push_back(i);
        }
        // Bellman-Ford over the residual graph; it has no negative cycles
        // because every intermediate matching is optimal for its size.
        while let Some(i) = queue.pop_front() {
            queued[i] = false;
            for &(d, j) in &adjacency[i] {
                if m.f[i] == Some(j) {
                    continue;
                }
                let dj = dist_f[i] - pair_gain(d, eta);
                if dj >= dist_g[j] {
                    continue;
                }
                if dist_g[j] == i64::MAX {
                    touched_g.push(j);
                }
                dist_g[j] = dj;
                pred_g[j] = i;
                if let Some((next, old)) = m.g[j] {
                    let dn = dj + pair_gain(old, eta);
                    if dn < dist_f[next] {
                        if dist_f[next] == i64::MAX {
                            touched_f.push(next);
                        }
                        dist_f[next] = dn;
                        if !queued[next] {
                            queued[next] = true;
                            queue.push_back(next);
                        }
                    }
                }
            }
        }
        let end = touched_g
            .iter()
            .copied()
            .filter(|&j| m.g[j].is_none() && dist_g[j] < 0)
            .min_by_key(|&j| (dist_g[j], j));
        let Some(mut j) = end else { break };
        loop {
            let i = pred_g[j];
            let d = adjacency[i].iter().find(|&&(_, k)| k == j).expect("edge exists").0;
            let previous = m.f[i];
            if let Some(p) = previous {
                m.g[p] = None;
            }
            m.pair(i, j, d);
            match previous {
                Some(p) => j = p,
                None => break,
            }
        }
        for &i in &touched_f {
            dist_f[i] = i64::MAX;
        }
        for &j in &touched_g {
            dist_g[j] = i64::MAX;
        }
        touched_f.clear();
        touched_g.clear();
    }
}

/// Local search over alternating paths and cycles of at most `REPAIR_DEPTH`
/// new pairs in the large components, applying any move that lowers the
/// cost until none is left. Pixels are tried in row-major order.
fn repair(adjacency: &[Vec<(u32, usize)>], small: &[bool], m: &mut Matching, eta: u32) {
    loop {
        let mut improved = false;
        for start in (0..adjacency.len()).filter(|&i| !small[i]) {
            let (gain, released) = match m.f[start] {
                Some(j) => (-pair_gain(m.g[j].expect("mates agree").1, eta), Some(j)),
                None => (0, None),
            };
            let mut search = PathSearch {
                adjacency,
                mate_g: &m.g,
                eta,
                released,
                path: Vec::new(),
                best: None,
            };
            search.extend(start, gain);
            let Some(best) = search.best.filter(|mv| mv.gain > 0) else {
                continue;
            };
            let touched = std::iter::once(start)
                .chain(best.pairs.iter().map(|&(i, _, _)| i))
                .chain(best.dropped);
            for i in touched {
                m.unpair(i);
            }
            for (i, j, d) in best.pairs {
                m.pair(i, j, d);
            }
            improved = true;
        }
        if !improved {
            break;
        }
    }
}

struct Move {
    gain: i64,
    /// New pairs `(f, g, d)`.
    pairs: Vec<(usize, usize, u32)>,
    /// f pixel left unmatched at the end of the path.
    dropped: Option<usize>,
}

struct PathSearch<'a> {
    adjacency: &'a [Vec<(u32, usize)>],
    mate_g: &'a [Option<(usize, u32)>],
    eta: u32,
    /// Former partner of the start pixel, free for the rest of the move.
    released: Option<usize>,
    path: Vec<(usize, usize, u32)>,
    best: Option<Move>,
}

impl PathSearch<'_> {
    fn offer(&mut self, gain: i64, dropped: Option<usize>) {
        if self.best.as_ref().is_none_or(|b| gain > b.gain) {
            self.best = Some(Move {
                gain,
                pairs: self.path.clone(),
                dropped,
            });
        }
    }

    /// `i` needs a partner; `gain` already counts every pair broken so far.
    fn extend(&mut self, i: usize, gain: i64) {
        if !self.path.is_empty() {
            self.offer(gain, Some(i));
        }
        for &(d, j) in &self.adjacency[i] {
            if self.path.iter().any(|&(_, pj, _)| pj == j) {
                continue;
            }
            let gain = gain + pair_gain(d, self.eta);
            self.path.push((i, j, d));
            match self.mate_g[j] {
                _ if self.released == Some(j) => self.offer(gain, None),
                None => self.offer(gain, None),
                Some((next, old)) if self.path.len() < REPAIR_DEPTH => {
                    self.extend(next, gain - pair_gain(old, self.eta));
                }
                Some(_) => {}
            }
            self.path.pop();
        }
    }
}
