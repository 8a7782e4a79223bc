//! Barnes-Hut approximation of the repulsive forces on a quadtree.

use super::affinity::SparseAffinities;
use super::exact::kernel;
use crate::par::Exec;

const MAX_DEPTH: usize = 48;

#[derive(Debug, Clone)]
struct Node {
    cx: f64,
    cy: f64,
    half: f64,
    mass: usize,
    com: [f64; 2],
    children: Option<[usize; 4]>,
    /// Point index, for leaves holding exactly one point (or duplicates at max depth).
    point: Option<usize>,
}

impl Node {
    fn new(cx: f64, cy: f64, half: f64) -> Self {
        Node {
            cx,
            cy,
            half,
            mass: 0,
            com: [0.0; 2],
            children: None,
            point: None,
        }
    }

    fn quadrant(&self, x: f64, y: f64) -> usize {
        usize::from(x >= self.cx) + 2 * usize::from(y >= self.cy)
    }
}

pub struct QuadTree {
    nodes: Vec<Node>,
}

impl QuadTree {
    pub fn build(y: &[f64]) -> Self {
        let n = y.len() / 2;
        let (mut minx, mut maxx, mut miny, mut maxy) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for i in 0..n {
            minx = minx.min(y[2 * i]);
            maxx = maxx.max(y[2 * i]);
            miny = miny.min(y[2 * i + 1]);
            maxy = maxy.max(y[2 * i + 1]);
        }
        let half = ((maxx - minx).max(maxy - miny) / 2.0).max(1e-12) * (1.0 + 1e-9);
        let mut tree = QuadTree {
            nodes: vec![Node::new((minx + maxx) / 2.0, (miny + maxy) / 2.0, half)],
        };
        for i in 0..n {
            tree.insert(0, i, y, 0);
        }
        tree
    }

    fn insert(&mut self, node: usize, i: usize, y: &[f64], depth: usize) {
        let (px, py) = (y[2 * i], y[2 * i + 1]);
        {
            let nd = &mut self.nodes[node];
            let m = nd.mass as f64;
            nd.com[0] = (nd.com[0] * m + px) / (m + 1.0);
            nd.com[1] = (nd.com[1] * m + py) / (m + 1.0);
            nd.mass += 1;
        }
        if self.nodes[node].mass == 1 {
            self.nodes[node].point = Some(i);
            return;
        }
        if depth >= MAX_DEPTH {
            // duplicate points pile up in one leaf
            return;
        }
        if self.nodes[node].children.is_none() {
            self.subdivide(node);
            if let Some(prev) = self.nodes[node].point.take() {
                let q = self.nodes[node].quadrant(y[2 * prev], y[2 * prev + 1]);
                let child = self.nodes[node].children.unwrap()[q];
                self.insert(child, prev, y, depth + 1);
            }
        }
        let q = self.nodes[node].quadrant(px, py);
        let child = self.nodes[node].children.unwrap()[q];
        self.insert(child, i, y, depth + 1);
    }

    fn subdivide(&mut self, node: usize) {
        let (cx, cy, h) = {
            let nd = &self.nodes[node];
            (nd.cx, nd.cy, nd.half / 2.0)
        };
        let base = self.nodes.len();
        for q in 0..4 {
            let ox = if q & 1 == 1 { h } else { -h };
            let oy = if q & 2 == 2 { h } else { -h };
            self.nodes.push(Node::new(cx + ox, cy + oy, h));
        }
        self.nodes[node].children = Some([base, base + 1, base + 2, base + 3]);
    }

    /// Accumulates unnormalized repulsion on point `i`. Returns `(sum_q, fx, fy)`.
    fn repulsion(&self, i: usize, y: &[f64], theta: f64) -> (f64, f64, f64) {
        let (px, py) = (y[2 * i], y[2 * i + 1]);
        let (mut sum_q, mut fx, mut fy) = (0.0, 0.0, 0.0);
        let mut stack = vec![0usize];
        while let Some(idx) = stack.pop() {
            let nd = &self.nodes[idx];
            if nd.mass == 0 {
                continue;
            }
            if nd.point == Some(i) && nd.mass == 1 {
                continue;
            }
            let dx = px - nd.com[0];
            let dy = py - nd.com[1];
            let d2 = dx * dx + dy * dy;
            let is_leaf = nd.children.is_none();
            if is_leaf || (2.0 * nd.half) * (2.0 * nd.half) < theta * theta * d2 {
                let mut mass = nd.mass as f64;
                if is_leaf && nd.point.is_some() && d2 == 0.0 {
                    // leaf holding `i` plus exact duplicates of it
                    let self_in_leaf = self.leaf_contains(idx, i, y);
                    if self_in_leaf {
                        mass -= 1.0;
                    }
                }
                if mass <= 0.0 {
                    continue;
                }
                let q = 1.0 / (1.0 + d2);
                sum_q += mass * q;
                let m = mass * q * q;
                fx += m * dx;
                fy += m * dy;
            } else if let Some(ch) = nd.children {
                stack.extend_from_slice(&ch);
            }
        }
        (sum_q, fx, fy)
    }

    fn leaf_contains(&self, idx: usize, i: usize, y: &[f64]) -> bool {
        let nd = &self.nodes[idx];
        nd.point == Some(i) || (nd.mass > 1 && nd.com == [y[2 * i], y[2 * i + 1]])
    }
}

/// Barnes-Hut gradient. Returns the estimated normalizer `Z`.
pub fn gradient_bh(p: &SparseAffinities, y: &[f64], exaggeration: f64, theta: f64, grad: &mut [f64], exec: Exec) -> f64 {
    let n = p.n;
    let tree = QuadTree::build(y);
    let rep: Vec<(f64, f64, f64)> = exec.map_range(n, |i| tree.repulsion(i, y, theta));
    let z: f64 = rep.iter().map(|r| r.0).sum();
    exec.for_each_chunk_mut(grad, 2, |i, g| {
        let (idx, val) = p.row(i);
        let (mut ax, mut ay) = (0.0, 0.0);
        for (&j, &pij) in idx.iter().zip(val) {
            let num = kernel(y, i, j);
            let m = exaggeration * pij * num;
            ax += m * (y[2 * i] - y[2 * j]);
            ay += m * (y[2 * i + 1] - y[2 * j + 1]);
        }
        g[0] = 4.0 * (ax - rep[i].1 / z);
        g[1] = 4.0 * (ay - rep[i].2 / z);
    });
    z
}

/// KL divergence over the sparse `P` using a tree estimate of `Z`.
pub fn kl_bh(p: &SparseAffinities, y: &[f64], theta: f64, exec: Exec) -> f64 {
    let tree = QuadTree::build(y);
    let z: f64 = exec.map_range(p.n, |i| tree.repulsion(i, y, theta).0).into_iter().sum();
    exec.map_range(p.n, |i| {
        let (idx, val) = p.row(i);
        idx.iter()
            .zip(val)
            .filter(|(_, &v)| v > 0.0)
            .map(|(&j, &pij)| pij * (pij / (kernel(y, i, j) / z)).ln())
            .sum::<f64>()
    })
    .into_iter()
    .sum()
}
