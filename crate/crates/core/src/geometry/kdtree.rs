use crate::error::{Error, Result};

use super::{le, PointCloud, Vec3};

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone, Copy)]
enum Node {
    Leaf {
        start: u32,
        end: u32,
    },
    Split {
        axis: u8,
        value: f64,
        left: u32,
        right: u32,
    },
}

/// Exact k-nearest-neighbour index over the positions of a [`PointCloud`].
///
/// Results are ordered by squared distance, then by point index, so equal
/// distances always resolve to the lower index first. Distances within
/// [`REL_EPS`](super::REL_EPS) of each other count as equal.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    /// Points in tree order, for locality during leaf scans.
    coords: Vec<[f64; 3]>,
    /// `order[i]` is the cloud index of `coords[i]`.
    order: Vec<u32>,
    nodes: Vec<Node>,
}

/// Fixed-capacity buffer of the best candidates seen so far, kept sorted.
struct Best<'a> {
    items: &'a mut Vec<(f64, u32)>,
    k: usize,
}

impl Best<'_> {
    #[inline]
    fn worst(&self) -> f64 {
        if self.items.len() < self.k {
            f64::INFINITY
        } else {
            self.items[self.k - 1].0
        }
    }

    #[inline]
    fn offer(&mut self, d2: f64, idx: u32) {
        let full = self.items.len() == self.k;
        if full {
            let (wd, wi) = self.items[self.k - 1];
            if d2 > wd || (d2 == wd && idx > wi) {
                return;
            }
            self.items.pop();
        }
        let pos = self
            .items
            .partition_point(|&(d, i)| d < d2 || (d == d2 && i < idx));
        self.items.insert(pos, (d2, idx));
    }
}

impl SpatialIndex {
    pub fn build(cloud: &PointCloud) -> Result<Self> {
        if cloud.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = cloud.len();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut nodes = Vec::with_capacity(2 * n / LEAF_SIZE + 1);
        build_node(&cloud.points, &mut order, 0, &mut nodes);
        let coords = order
            .iter()
            .map(|&i| {
                let p = &cloud.points[i as usize];
                [p.x, p.y, p.z]
            })
            .collect();
        Ok(SpatialIndex {
            coords,
            order,
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// The `k` nearest points to `query` as `(index, squared distance)`.
    pub fn nearest(&self, query: &Vec3, k: usize) -> Vec<(usize, f64)> {
        let mut buf = Vec::with_capacity(k + 1);
        self.search(&[query.x, query.y, query.z], k, None, &mut buf);
        buf.into_iter().map(|(d, i)| (i as usize, d)).collect()
    }

    /// Neighbours of point `index`, excluding the point itself. Returns
    /// `min(k, N - 1)` indices in ascending distance order.
    pub fn neighbors(&self, cloud: &PointCloud, index: usize, k: usize) -> Vec<usize> {
        let mut buf = Vec::with_capacity(k + 1);
        self.neighbors_into(cloud, index, k, &mut buf);
        buf.into_iter().map(|(_, i)| i as usize).collect()
    }

    /// Allocation-free variant of [`neighbors`](Self::neighbors); fills
    /// `buf` with `(squared distance, index)` pairs.
    pub fn neighbors_into(
        &self,
        cloud: &PointCloud,
        index: usize,
        k: usize,
        buf: &mut Vec<(f64, u32)>,
    ) {
        let p = &cloud.points[index];
        let k = k.min(self.len().saturating_sub(1));
        self.search(&[p.x, p.y, p.z], k, Some(index as u32), buf);
    }

    fn search(&self, q: &[f64; 3], k: usize, exclude: Option<u32>, buf: &mut Vec<(f64, u32)>) {
        buf.clear();
        if k == 0 {
            return;
        }
        let available = self.len() - exclude.is_some() as usize;
        let mut fetch = (k + 8).min(available);
        loop {
            buf.clear();
            let mut best = Best { items: buf, k: fetch };
            self.search_node(0, q, exclude, &mut best);
            // The tie class holding the k-th neighbour must be complete.
            if buf.is_empty() {
                return;
            }
            let anchor = tie_class_start(buf, k.min(buf.len()) - 1);
            let end = class_end_from(buf, anchor);
            let class_end = (end < buf.len()).then_some(end);
            if class_end.is_some() || fetch == available {
                buf.truncate(class_end.unwrap_or(buf.len()));
                let mut start = 0;
                while start < buf.len() {
                    let end = class_end_from(buf, start);
                    buf[start..end].sort_unstable_by_key(|&(_, i)| i);
                    start = end;
                }
                buf.truncate(k);
                return;
            }
            fetch = (2 * fetch).min(available);
        }
    }

    fn search_node(&self, node: usize, q: &[f64; 3], exclude: Option<u32>, best: &mut Best) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for slot in start as usize..end as usize {
                    let idx = self.order[slot];
                    if Some(idx) == exclude {
                        continue;
                    }
                    let c = &self.coords[slot];
                    let dx = c[0] - q[0];
                    let dy = c[1] - q[1];
                    let dz = c[2] - q[2];
                    best.offer(dx * dx + dy * dy + dz * dz, idx);
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis as usize] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search_node(near as usize, q, exclude, best);
                // Equal distance can still hold a lower-index tie.
                if diff * diff <= best.worst() {
                    self.search_node(far as usize, q, exclude, best);
                }
            }
        }
    }
}

/// End of the tie class starting at `start` of a sorted list.
fn class_end_from(items: &[(f64, u32)], start: usize) -> usize {
    items[start..]
        .iter()
        .position(|&(d, _)| !le(d, items[start].0))
        .map_or(items.len(), |p| start + p)
}

/// Start of the tie class containing position `pos` of a sorted list.
fn tie_class_start(items: &[(f64, u32)], pos: usize) -> usize {
    let mut start = 0;
    loop {
        let end = class_end_from(items, start);
        if pos < end {
            return start;
        }
        start = end;
    }
}

fn build_node(points: &[Vec3], order: &mut [u32], offset: usize, nodes: &mut Vec<Node>) -> u32 {
    let id = nodes.len() as u32;
    if order.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: offset as u32,
            end: (offset + order.len()) as u32,
        });
        return id;
    }

    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in order.iter() {
        let p = &points[i as usize];
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let axis = (0..3)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .unwrap_or(0);
    if hi[axis] - lo[axis] <= 0.0 {
        // All points coincide; no split can separate them.
        nodes.push(Node::Leaf {
            start: offset as u32,
            end: (offset + order.len()) as u32,
        });
        return id;
    }

    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize][axis]
            .total_cmp(&points[b as usize][axis])
            .then(a.cmp(&b))
    });
    let value = points[order[mid] as usize][axis];

    nodes.push(Node::Split {
        axis: axis as u8,
        value,
        left: 0,
        right: 0,
    });
    let (lower, upper) = order.split_at_mut(mid);
    let left = build_node(points, lower, offset, nodes);
    let right = build_node(points, upper, offset + mid, nodes);
    if let Node::Split {
        left: l, right: r, ..
    } = &mut nodes[id as usize]
    {
        *l = left;
        *r = right;
    }
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(cloud: &PointCloud, index: usize, k: usize) -> Vec<usize> {
        let p = cloud.points[index];
        let mut all: Vec<(f64, usize)> = cloud
            .points
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != index)
            .map(|(i, q)| ((q - p).norm_squared(), i))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        // Distances within a relative 1e-9 of a run's first value are ties.
        let mut start = 0;
        while start < all.len() {
            let anchor = all[start].0;
            let mut end = start;
            while end < all.len() && all[end].0 <= anchor * (1.0 + 1e-9) {
                end += 1;
            }
            all[start..end].sort_by_key(|&(_, i)| i);
            start = end;
        }
        all.into_iter().take(k).map(|(_, i)| i).collect()
    }

    #[test]
    fn empty_cloud_is_rejected() {
        assert!(matches!(
            SpatialIndex::build(&PointCloud::default()),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn two_points_single_neighbor() {
        let cloud = PointCloud::from_xyz(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        let index = SpatialIndex::build(&cloud).unwrap();
        assert_eq!(index.neighbors(&cloud, 0, 1), vec![1]);
        // k larger than N - 1 clamps.
        assert_eq!(index.neighbors(&cloud, 0, 5), vec![1]);
    }

    #[test]
    fn grid_center_has_axis_neighbors() {
        let coords: Vec<[f64; 3]> = (0..10)
            .flat_map(|y| (0..10).map(move |x| [x as f64, y as f64, 0.0]))
            .collect();
        let cloud = PointCloud::from_xyz(&coords);
        let index = SpatialIndex::build(&cloud).unwrap();
        let center = 5 * 10 + 5;
        let mut got = index.neighbors(&cloud, center, 4);
        got.sort();
        assert_eq!(got, vec![center - 10, center - 1, center + 1, center + 10]);
        assert_eq!(got, {
            let mut b = brute_force(&cloud, center, 4);
            b.sort();
            b
        });
        // Ties among the 8 neighbours at distance 1 and sqrt 2 follow index order.
        assert_eq!(
            index.neighbors(&cloud, center, 8),
            brute_force(&cloud, center, 8)
        );
    }

    #[test]
    fn duplicates_are_neighbors_at_zero() {
        let cloud = PointCloud::from_xyz(&[[0.0; 3], [0.0; 3], [0.0; 3], [1.0, 0.0, 0.0]]);
        let index = SpatialIndex::build(&cloud).unwrap();
        assert_eq!(index.neighbors(&cloud, 1, 3), vec![0, 2, 3]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn matches_brute_force(
            coords in prop::collection::vec(prop::array::uniform3(-10.0f64..10.0), 2..2000),
            k in 1usize..25,
            probe in 0usize..2000,
        ) {
            let cloud = PointCloud::from_xyz(&coords);
            let index = SpatialIndex::build(&cloud).unwrap();
            let i = probe % cloud.len();
            prop_assert_eq!(index.neighbors(&cloud, i, k), brute_force(&cloud, i, k));
        }

        #[test]
        fn matches_brute_force_on_lattice(
            n in 2usize..12,
            k in 1usize..30,
            probe in 0usize..2000,
        ) {
            // Integer lattice points produce many exact distance ties.
            let coords: Vec<[f64; 3]> = (0..n * n * 2)
                .map(|i| [(i % n) as f64, ((i / n) % n) as f64, (i / (n * n)) as f64])
                .collect();
            let cloud = PointCloud::from_xyz(&coords);
            let index = SpatialIndex::build(&cloud).unwrap();
            let i = probe % cloud.len();
            prop_assert_eq!(index.neighbors(&cloud, i, k), brute_force(&cloud, i, k));
        }
    }

    #[test]
    fn round_off_ties_resolve_by_index() {
        // Both neighbours sit at distance 1 up to round-off.
        let cloud = PointCloud::from_xyz(&[
            [0.0, 0.0, 0.0],
            [1.0 + 1e-14, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 2.0],
        ]);
        let index = SpatialIndex::build(&cloud).unwrap();
        assert_eq!(index.neighbors(&cloud, 0, 1), vec![1]);
        assert_eq!(index.neighbors(&cloud, 0, 3), vec![1, 2, 3]);
    }
}
