use crate::norm::Norm;

const LEAF: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// Static kd-tree over a flat point array, exact nearest neighbour with
/// ties resolved towards the lowest point index.
#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    points: Vec<f64>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn new(points: &[f64], dim: usize) -> Self {
        let n = points.len() / dim;
        let mut tree = KdTree { dim, points: points.to_vec(), order: (0..n).collect(), nodes: Vec::new() };
        if n > 0 {
            tree.build(0, n);
        }
        tree
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let d = self.dim;
        let mut axis = 0;
        let mut widest = -1.0;
        for k in 0..d {
            let (lo, hi) = self.order[start..end]
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    let v = self.points[i * d + k];
                    (lo.min(v), hi.max(v))
                });
            if hi - lo > widest {
                widest = hi - lo;
                axis = k;
            }
        }
        let mid = (start + end) / 2;
        let pts = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| pts[a * d + axis].total_cmp(&pts[b * d + axis]));
        let value = self.points[self.order[mid] * d + axis];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    /// (index, rank distance) of the nearest point.
    pub fn nearest(&self, x: &[f64], norm: Norm) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        if !self.nodes.is_empty() {
            self.search(0, x, norm, &mut best);
        }
        best
    }

    fn search(&self, node: usize, x: &[f64], norm: Norm, best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let dist = norm.rank_dist(x, self.point(i));
                    if dist < best.1 || (dist == best.1 && i < best.0) {
                        *best = (i, dist);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = x[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, x, norm, best);
                let bound = match norm {
                    Norm::Euclidean => diff * diff,
                    Norm::Sup => diff.abs(),
                };
                if bound <= best.1 {
                    self.search(far, x, norm, best);
                }
            }
        }
    }
}
