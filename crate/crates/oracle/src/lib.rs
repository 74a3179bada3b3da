//! Exhaustive reference enumerators for small king-graph instances.
//!
//! Everything here works on plain arrays and deliberately avoids priority
//! queues: each routine walks every simple path (or cycle) with a simple
//! admissible bound, so it is only usable on masks of a few dozen vertices.

use std::f64::consts::{PI, SQRT_2, TAU};

/// Relative margin within which the cycle search treats two lengths as tied.
/// The reported shortest cycle is exact up to this factor.
pub const CYCLE_TIE: f64 = 1e-12;

/// A vertex-weighted `n x n` lattice restricted to a mask. Vertex `i` sits at
/// column `i % n`, row `i / n`.
#[derive(Clone, Debug)]
pub struct Lattice {
    pub n: usize,
    pub delta: f64,
    pub weights: Vec<f64>,
    pub mask: Vec<bool>,
}

/// A shortest simple path or cycle with its length.
#[derive(Clone, Debug, PartialEq)]
pub struct Best {
    pub length: f64,
    pub vertices: Vec<usize>,
}

impl Lattice {
    pub fn new(n: usize, delta: f64, weights: Vec<f64>, mask: Vec<bool>) -> Self {
        assert_eq!(weights.len(), n * n);
        assert_eq!(mask.len(), n * n);
        Lattice {
            n,
            delta,
            weights,
            mask,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    fn xy(&self, i: usize) -> (i64, i64) {
        ((i % self.n) as i64, (i / self.n) as i64)
    }

    /// Trapezoid edge rule: step length times the mean of the endpoint weights.
    pub fn edge(&self, u: usize, v: usize) -> f64 {
        let (ux, uy) = self.xy(u);
        let (vx, vy) = self.xy(v);
        let step = if ux != vx && uy != vy {
            self.delta * SQRT_2
        } else {
            self.delta
        };
        step * (self.weights[u] + self.weights[v]) * 0.5
    }

    pub fn neighbors(&self, u: usize) -> Vec<usize> {
        let (ux, uy) = self.xy(u);
        let n = self.n as i64;
        let mut out = Vec::with_capacity(8);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (x, y) = (ux + dx, uy + dy);
                if (dx, dy) == (0, 0) || x < 0 || y < 0 || x >= n || y >= n {
                    continue;
                }
                let v = (y * n + x) as usize;
                if self.mask[v] {
                    out.push(v);
                }
            }
        }
        out
    }

    fn masked(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&i| self.mask[i]).collect()
    }

    /// Shortest simple path from any source to any target through masked-in
    /// vertices. Lengths accumulate from the source end.
    ///
    /// Branches are pruned with Floyd-Warshall distances to the target set.
    pub fn shortest_path(&self, sources: &[usize], targets: &[usize]) -> Option<Best> {
        let verts = self.masked();
        let mut is_target = vec![false; self.weights.len()];
        for &t in targets {
            if self.mask[t] {
                is_target[t] = true;
            }
        }
        let apsp = floyd_warshall(verts.len(), |i, f| {
            for v in self.neighbors(verts[i]) {
                let j = verts.binary_search(&v).expect("masked neighbour");
                f(j, self.edge(verts[i], v));
            }
        });
        let m = verts.len();
        let mut to_go = vec![f64::INFINITY; self.weights.len()];
        for (i, &u) in verts.iter().enumerate() {
            to_go[u] = (0..m)
                .filter(|&j| is_target[verts[j]])
                .map(|j| apsp[i * m + j])
                .fold(f64::INFINITY, f64::min)
                * (1.0 - 1e-9);
        }
        let mut walk = PathWalk {
            lat: self,
            is_target: &is_target,
            to_go,
            on_path: vec![false; self.weights.len()],
            path: Vec::new(),
            best: None,
        };
        for &s in sources {
            if !self.mask[s] || walk.to_go[s].is_infinite() {
                continue;
            }
            walk.path.push(s);
            walk.on_path[s] = true;
            walk.extend(s, 0.0);
            walk.on_path[s] = false;
            walk.path.pop();
        }
        walk.best
    }

    /// Shortest simple cycle whose winding number about `center` (given in
    /// lattice units, i.e. column/row coordinates) is odd. Cycles are walked
    /// from every start vertex, which repeats work but keeps the bound tight.
    ///
    /// Branches are pruned with all-pairs (Floyd-Warshall) distances on the
    /// two-sheeted cover cut along the branch line of `atan2`, which bound the
    /// length of any closing walk of the required parity from below.
    pub fn shortest_odd_cycle(&self, center: (f64, f64)) -> Option<Best> {
        let verts = self.masked();
        let mut slot = vec![usize::MAX; self.weights.len()];
        for (k, &v) in verts.iter().enumerate() {
            slot[v] = k;
        }
        let m = 2 * verts.len();
        let cover = floyd_warshall(m, |i, f| {
            let (u, p) = (verts[i / 2], i % 2);
            for v in self.neighbors(u) {
                let flip = (self.angle(center, v) - self.angle(center, u)).abs() > PI;
                f(2 * slot[v] + (p ^ usize::from(flip)), self.edge(u, v));
            }
        });
        let mut walk = CycleWalk {
            lat: self,
            center,
            slot,
            m,
            cover,
            on_path: vec![false; self.weights.len()],
            path: Vec::new(),
            best: None,
        };
        // most promising starts first, so an incumbent appears early
        let mut starts: Vec<(f64, usize)> = verts.iter().map(|&s| (walk.to_close(s, s, 0.0), s)).collect();
        starts.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (floor, s) in starts {
            if walk.hopeless(floor) {
                break;
            }
            walk.path.push(s);
            walk.on_path[s] = true;
            walk.extend(s, s, 0.0, 0.0);
            walk.on_path[s] = false;
            walk.path.pop();
        }
        walk.best
    }

    fn angle(&self, center: (f64, f64), u: usize) -> f64 {
        let (x, y) = self.xy(u);
        (y as f64 - center.1).atan2(x as f64 - center.0)
    }

    /// Signed angle swept by the step `u -> v` as seen from `center`.
    fn sweep(&self, center: (f64, f64), u: usize, v: usize) -> f64 {
        let mut d = self.angle(center, v) - self.angle(center, u);
        if d > PI {
            d -= TAU;
        } else if d < -PI {
            d += TAU;
        }
        d
    }
}

/// Dense all-pairs shortest distances over `m` states; `arcs(i, f)` reports
/// each arc out of `i` as `f(j, length)`.
fn floyd_warshall(m: usize, mut arcs: impl FnMut(usize, &mut dyn FnMut(usize, f64))) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; m * m];
    for i in 0..m {
        d[i * m + i] = 0.0;
        arcs(i, &mut |j, w| d[i * m + j] = d[i * m + j].min(w));
    }
    for k in 0..m {
        for i in 0..m {
            let ik = d[i * m + k];
            if ik.is_infinite() {
                continue;
            }
            for j in 0..m {
                let through = ik + d[k * m + j];
                if through < d[i * m + j] {
                    d[i * m + j] = through;
                }
            }
        }
    }
    d
}

struct PathWalk<'a> {
    lat: &'a Lattice,
    is_target: &'a [bool],
    to_go: Vec<f64>,
    on_path: Vec<bool>,
    path: Vec<usize>,
    best: Option<Best>,
}

impl PathWalk<'_> {
    fn bound(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.length)
    }

    fn extend(&mut self, u: usize, acc: f64) {
        if self.is_target[u] {
            if acc < self.bound() {
                self.best = Some(Best {
                    length: acc,
                    vertices: self.path.clone(),
                });
            }
            // any continuation through a target is no shorter than stopping here
            return;
        }
        let mut next: Vec<(f64, usize)> = self
            .lat
            .neighbors(u)
            .into_iter()
            .filter(|&v| !self.on_path[v])
            .map(|v| (acc + self.lat.edge(u, v), v))
            .collect();
        next.sort_by(|a, b| (a.0 + self.to_go[a.1]).total_cmp(&(b.0 + self.to_go[b.1])));
        for (len, v) in next {
            if len + self.to_go[v] >= self.bound() {
                continue;
            }
            self.on_path[v] = true;
            self.path.push(v);
            self.extend(v, len);
            self.path.pop();
            self.on_path[v] = false;
        }
    }
}

struct CycleWalk<'a> {
    lat: &'a Lattice,
    center: (f64, f64),
    slot: Vec<usize>,
    m: usize,
    cover: Vec<f64>,
    on_path: Vec<bool>,
    path: Vec<usize>,
    best: Option<Best>,
}

impl CycleWalk<'_> {
    fn bound(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.length)
    }

    /// Lower bound on closing the walk at `start` with an odd total winding,
    /// having swept `turned` radians on the way to `v`.
    fn to_close(&self, start: usize, v: usize, turned: f64) -> f64 {
        let (lat, c) = (self.lat, self.center);
        let cuts = ((turned - (lat.angle(c, v) - lat.angle(c, start))) / TAU).round() as i64;
        let sheet = cuts.rem_euclid(2) as usize;
        let (i, j) = (2 * self.slot[v] + sheet, 2 * self.slot[start] + 1);
        self.cover[i * self.m + j]
    }

    /// Branches that cannot beat the incumbent by more than `CYCLE_TIE`
    /// (relative) are dropped; on flat weights the number of exactly tied
    /// cycles is otherwise exponential.
    fn hopeless(&self, estimate: f64) -> bool {
        estimate >= self.bound() * (1.0 - CYCLE_TIE)
    }

    fn extend(&mut self, start: usize, u: usize, acc: f64, turned: f64) {
        let mut next = Vec::with_capacity(8);
        for v in self.lat.neighbors(u) {
            let len = acc + self.lat.edge(u, v);
            if v == start {
                if self.path.len() < 3 {
                    continue;
                }
                let total = turned + self.lat.sweep(self.center, u, v);
                let winding = (total / TAU).round() as i64;
                if winding % 2 != 0 && len < self.bound() {
                    let mut vertices = self.path.clone();
                    vertices.push(start);
                    self.best = Some(Best { length: len, vertices });
                }
                continue;
            }
            if self.on_path[v] {
                continue;
            }
            let t = turned + self.lat.sweep(self.center, u, v);
            next.push((len + self.to_close(start, v, t), len, t, v));
        }
        next.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (estimate, len, t, v) in next {
            if self.hopeless(estimate) {
                continue;
            }
            self.on_path[v] = true;
            self.path.push(v);
            self.extend(start, v, len, t);
            self.path.pop();
            self.on_path[v] = false;
        }
    }
}
