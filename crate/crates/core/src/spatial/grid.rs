use super::Point;

/// Uniform bucket index over a square window.
///
/// Buckets are stored CSR-style: `starts[b]..starts[b + 1]` indexes into
/// `items`, which holds point indices in ascending order within each bucket.
#[derive(Debug, Clone)]
pub struct GridIndex {
    origin: Point,
    bucket: f64,
    cols: usize,
    rows: usize,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl GridIndex {
    /// Index every point of `points` inside the window `[0, side]^2`.
    pub fn new(points: &[Point], side: f64, bucket: f64) -> Self {
        let all: Vec<u32> = (0..points.len() as u32).collect();
        Self::with_subset(points, &all, Point::new(0.0, 0.0), side, bucket)
    }

    /// Index only the points named in `subset`, inside `origin + [0, extent]^2`.
    pub fn with_subset(
        points: &[Point],
        subset: &[u32],
        origin: Point,
        extent: f64,
        bucket: f64,
    ) -> Self {
        let bucket = if bucket.is_finite() && bucket > 0.0 {
            bucket
        } else {
            1.0
        };
        let extent = extent.max(bucket);
        let per_side = ((extent / bucket).ceil() as usize).clamp(1, 1 << 12);
        let (cols, rows) = (per_side, per_side);
        let mut counts = vec![0u32; cols * rows + 1];
        let mut grid = GridIndex {
            origin,
            bucket,
            cols,
            rows,
            starts: Vec::new(),
            items: Vec::new(),
        };
        let slots: Vec<usize> = subset
            .iter()
            .map(|&i| {
                let (cx, cy) = grid.bucket_of(points[i as usize]);
                cy * cols + cx
            })
            .collect();
        for &s in &slots {
            counts[s + 1] += 1;
        }
        for b in 0..cols * rows {
            counts[b + 1] += counts[b];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; subset.len()];
        let mut order: Vec<usize> = (0..subset.len()).collect();
        order.sort_unstable_by_key(|&k| subset[k]);
        for k in order {
            let s = slots[k];
            items[fill[s] as usize] = subset[k];
            fill[s] += 1;
        }
        grid.starts = counts;
        grid.items = items;
        grid
    }

    pub fn bucket_side(&self) -> f64 {
        self.bucket
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.cols, self.rows)
    }

    /// Bucket coordinates of `p`, clamped into the grid.
    pub fn bucket_of(&self, p: Point) -> (usize, usize) {
        let fx = ((p.x - self.origin.x) / self.bucket).floor();
        let fy = ((p.y - self.origin.y) / self.bucket).floor();
        let cx = if fx.is_nan() || fx < 0.0 {
            0
        } else {
            (fx as usize).min(self.cols - 1)
        };
        let cy = if fy.is_nan() || fy < 0.0 {
            0
        } else {
            (fy as usize).min(self.rows - 1)
        };
        (cx, cy)
    }

    pub fn bucket_items(&self, cx: usize, cy: usize) -> &[u32] {
        let b = cy * self.cols + cx;
        &self.items[self.starts[b] as usize..self.starts[b + 1] as usize]
    }

    /// Calls `f` for every indexed point within Euclidean distance `radius` of `center`.
    pub fn for_each_within<F: FnMut(u32)>(
        &self,
        points: &[Point],
        center: Point,
        radius: f64,
        mut f: F,
    ) {
        let r2 = radius * radius;
        let lo = self.bucket_of(Point::new(center.x - radius, center.y - radius));
        let hi = self.bucket_of(Point::new(center.x + radius, center.y + radius));
        for cy in lo.1..=hi.1 {
            for cx in lo.0..=hi.0 {
                for &i in self.bucket_items(cx, cy) {
                    if points[i as usize].dist2(center) <= r2 {
                        f(i);
                    }
                }
            }
        }
    }

    /// Indexed points within `radius` of `center`, in ascending index order.
    pub fn within(&self, points: &[Point], center: Point, radius: f64) -> Vec<u32> {
        let mut out = Vec::new();
        self.for_each_within(points, center, radius, |i| out.push(i));
        out.sort_unstable();
        out
    }

    /// Nearest indexed point to `p`; ties go to the lowest index.
    pub fn nearest(&self, points: &[Point], p: Point) -> Option<u32> {
        self.nearest_where(points, p, |_| true).map(|(i, _)| i)
    }

    /// Nearest indexed point accepted by `keep`, with its squared distance.
    ///
    /// Rings of buckets are scanned outward until no unvisited bucket can hold
    /// a point closer than the current best.
    pub fn nearest_where<F: Fn(u32) -> bool>(
        &self,
        points: &[Point],
        p: Point,
        keep: F,
    ) -> Option<(u32, f64)> {
        self.nearest_bounded(points, p, f64::INFINITY, keep)
    }

    /// Like [`nearest_where`](Self::nearest_where) but gives up on candidates
    /// whose squared distance exceeds `max_d2`.
    pub fn nearest_bounded<F: Fn(u32) -> bool>(
        &self,
        points: &[Point],
        p: Point,
        max_d2: f64,
        keep: F,
    ) -> Option<(u32, f64)> {
        let (cx, cy) = self.bucket_of(p);
        let mut best: Option<(u32, f64)> = None;
        let max_ring = self.cols.max(self.rows);
        for k in 0..=max_ring {
            let x0 = cx as isize - k as isize;
            let x1 = cx as isize + k as isize;
            let y0 = cy as isize - k as isize;
            let y1 = cy as isize + k as isize;
            for y in y0.max(0)..=y1.min(self.rows as isize - 1) {
                let on_edge_row = y == y0 || y == y1;
                let mut x = x0.max(0);
                while x <= x1.min(self.cols as isize - 1) {
                    for &i in self.bucket_items(x as usize, y as usize) {
                        if !keep(i) {
                            continue;
                        }
                        let d2 = points[i as usize].dist2(p);
                        if d2 > max_d2 {
                            continue;
                        }
                        let better = match best {
                            None => true,
                            Some((bi, bd)) => d2 < bd || (d2 == bd && i < bi),
                        };
                        if better {
                            best = Some((i, d2));
                        }
                    }
                    if on_edge_row || x == x1 {
                        x += 1;
                    } else {
                        // interior of the ring was visited in earlier passes
                        x = x1;
                    }
                }
            }
            let lb = self.outside_block_distance(p, x0, x1, y0, y1);
            let bound = best.map(|(_, d2)| d2).unwrap_or(max_d2);
            if lb.is_infinite() || (lb > 0.0 && lb * lb > bound) {
                break;
            }
        }
        best
    }

    /// Lower bound on the distance from `p` to any bucket outside the block
    /// `[x0, x1] x [y0, y1]`; infinite once the block covers the whole grid.
    fn outside_block_distance(&self, p: Point, x0: isize, x1: isize, y0: isize, y1: isize) -> f64 {
        let b = self.bucket;
        let mut lb = f64::INFINITY;
        if x0 > 0 {
            lb = lb.min(p.x - (self.origin.x + x0 as f64 * b));
        }
        if x1 < self.cols as isize - 1 {
            lb = lb.min(self.origin.x + (x1 + 1) as f64 * b - p.x);
        }
        if y0 > 0 {
            lb = lb.min(p.y - (self.origin.y + y0 as f64 * b));
        }
        if y1 < self.rows as isize - 1 {
            lb = lb.min(self.origin.y + (y1 + 1) as f64 * b - p.y);
        }
        lb
    }
}
