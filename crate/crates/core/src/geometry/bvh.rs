//! Median-split bounding-volume hierarchy over arbitrary bounded items.
//!
//! Used both for the triangles of a mesh and for the objects of a scene.

use super::{Aabb, Vec3};

pub const MAX_LEAF_SIZE: usize = 4;

#[derive(Clone, Debug)]
struct Node {
    bounds: Aabb,
    /// Leaf: first slot in `order`. Interior: index of the left child (right is `first + 1`).
    first: u32,
    /// Number of items for a leaf, zero for interior nodes.
    count: u32,
}

#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
}

impl Bvh {
    /// Builds the hierarchy. Items are split at the median centroid along the
    /// longest axis of the centroid bounds until at most `MAX_LEAF_SIZE` remain.
    pub fn build(bounds: &[Aabb]) -> Bvh {
        let mut order: Vec<u32> = (0..bounds.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * bounds.len().max(1));
        if bounds.is_empty() {
            return Bvh { nodes, order };
        }
        let centroids: Vec<Vec3> = bounds.iter().map(|b| b.center()).collect();
        nodes.push(Node { bounds: Aabb::EMPTY, first: 0, count: 0 });
        // (node index, start, end)
        let mut stack = vec![(0usize, 0usize, bounds.len())];
        while let Some((node, start, end)) = stack.pop() {
            let slice = &mut order[start..end];
            let node_bounds = slice.iter().fold(Aabb::EMPTY, |b, &i| b.union(bounds[i as usize]));
            if slice.len() <= MAX_LEAF_SIZE {
                nodes[node] = Node { bounds: node_bounds, first: start as u32, count: slice.len() as u32 };
                continue;
            }
            let cb = Aabb::from_points(slice.iter().map(|&i| centroids[i as usize]));
            let ext = cb.extent();
            let axis = if ext.x >= ext.y && ext.x >= ext.z {
                0
            } else if ext.y >= ext.z {
                1
            } else {
                2
            };
            let mid = slice.len() / 2;
            slice.select_nth_unstable_by(mid, |&a, &b| {
                centroids[a as usize][axis].total_cmp(&centroids[b as usize][axis]).then(a.cmp(&b))
            });
            let left = nodes.len();
            nodes.push(Node { bounds: Aabb::EMPTY, first: 0, count: 0 });
            nodes.push(Node { bounds: Aabb::EMPTY, first: 0, count: 0 });
            nodes[node] = Node { bounds: node_bounds, first: left as u32, count: 0 };
            stack.push((left + 1, start + mid, end));
            stack.push((left, start, start + mid));
        }
        Bvh { nodes, order }
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes.first().map_or(Aabb::EMPTY, |n| n.bounds)
    }

    /// Finds the item with the smallest hit parameter in `(t_min, t_max]`.
    ///
    /// `hit` is called with an item index and the current best parameter and
    /// must return the item's own hit parameter if it is below that bound.
    pub fn closest<F>(&self, origin: Vec3, inv_dir: Vec3, t_min: f64, t_max: f64, mut hit: F) -> Option<(u32, f64)>
    where
        F: FnMut(u32, f64) -> Option<f64>,
    {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(u32, f64)> = None;
        let mut bound = t_max;
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if node.bounds.ray_span(origin, inv_dir, t_min, bound).is_none() {
                continue;
            }
            if node.count > 0 {
                let start = node.first as usize;
                for &item in &self.order[start..start + node.count as usize] {
                    if let Some(t) = hit(item, bound) {
                        if t > t_min && t <= bound && best.is_none_or(|(_, bt)| t < bt) {
                            best = Some((item, t));
                            bound = t;
                        }
                    }
                }
            } else {
                let l = node.first;
                let r = l + 1;
                let near_l = self.nodes[l as usize].bounds.ray_span(origin, inv_dir, t_min, bound);
                let near_r = self.nodes[r as usize].bounds.ray_span(origin, inv_dir, t_min, bound);
                match (near_l, near_r) {
                    (Some((tl, _)), Some((tr, _))) => {
                        // Push the farther child first so the nearer one is visited first.
                        if tl <= tr {
                            stack.push(r);
                            stack.push(l);
                        } else {
                            stack.push(l);
                            stack.push(r);
                        }
                    }
                    (Some(_), None) => stack.push(l),
                    (None, Some(_)) => stack.push(r),
                    (None, None) => {}
                }
            }
        }
        best
    }

    /// Checks that every leaf's box encloses its items and every interior box
    /// encloses its children.
    pub fn encloses_all(&self, bounds: &[Aabb]) -> bool {
        let inside = |outer: &Aabb, inner: &Aabb| {
            outer.min.x <= inner.min.x
                && outer.min.y <= inner.min.y
                && outer.min.z <= inner.min.z
                && outer.max.x >= inner.max.x
                && outer.max.y >= inner.max.y
                && outer.max.z >= inner.max.z
        };
        let mut seen = vec![false; bounds.len()];
        for node in &self.nodes {
            if node.count > 0 {
                let start = node.first as usize;
                for &i in &self.order[start..start + node.count as usize] {
                    if !inside(&node.bounds, &bounds[i as usize]) {
                        return false;
                    }
                    seen[i as usize] = true;
                }
            } else {
                let l = &self.nodes[node.first as usize];
                let r = &self.nodes[node.first as usize + 1];
                if !inside(&node.bounds, &l.bounds) || !inside(&node.bounds, &r.bounds) {
                    return false;
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn max_leaf_size(&self) -> usize {
        self.nodes.iter().map(|n| n.count as usize).max().unwrap_or(0)
    }
}
