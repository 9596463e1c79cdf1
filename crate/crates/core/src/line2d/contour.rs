use crate::raster::Bitmap;

#[derive(Debug, Copy, Clone, PartialEq, Eq)]
pub enum BorderKind {
    /// Border between a component and the background surrounding it.
    Outer,
    /// Border between a component and a hole inside it.
    Hole,
}

/// Closed 8-connected chain of border pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    /// Pixel `(u, v)` coordinates in tracing order; the chain closes back
    /// onto the first point.
    pub points: Vec<[i32; 2]>,
    pub kind: BorderKind,
    /// Index of the enclosing border in the same list, if any.
    pub parent: Option<usize>,
}

impl Contour {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

// Clockwise on screen (v grows downward), starting east.
const DIRS: [(i32, i32); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

fn dir_index(du: i32, dv: i32) -> usize {
    DIRS.iter()
        .position(|&d| d == (du, dv))
        .expect("neighbouring pixel")
}

/// All borders of 8-connected foreground components (and their 4-connected
/// holes) by Suzuki-Abe border following, with hierarchy.
pub fn trace_borders(image: &Bitmap) -> Vec<Contour> {
    let w = image.width() + 2;
    let h = image.height() + 2;
    let mut f = vec![0i32; w * h];
    for (u, v) in image.ones() {
        f[(v + 1) * w + u + 1] = 1;
    }
    let at = |u: i32, v: i32| (v as usize) * w + u as usize;

    let mut contours: Vec<Contour> = Vec::new();
    // Border number n maps to contours[n - 2]; 1 is the image frame.
    let mut nbd = 1i32;
    for v in 1..(h - 1) as i32 {
        let mut lnbd = 1i32;
        for u in 1..(w - 1) as i32 {
            let fij = f[at(u, v)];
            if fij == 0 {
                continue;
            }
            let start = if fij == 1 && f[at(u - 1, v)] == 0 {
                Some(((u - 1, v), BorderKind::Outer))
            } else if fij >= 1 && f[at(u + 1, v)] == 0 {
                if fij > 1 {
                    lnbd = fij;
                }
                Some(((u + 1, v), BorderKind::Hole))
            } else {
                None
            };

            if let Some((from, kind)) = start {
                nbd += 1;
                let parent = {
                    let (lkind, lparent) = if lnbd <= 1 {
                        (BorderKind::Hole, None)
                    } else {
                        let c = &contours[(lnbd - 2) as usize];
                        (c.kind, c.parent)
                    };
                    let lidx = if lnbd <= 1 {
                        None
                    } else {
                        Some((lnbd - 2) as usize)
                    };
                    if kind == lkind {
                        lparent
                    } else {
                        lidx
                    }
                };
                let points = follow(&mut f, w, (u, v), from, nbd);
                contours.push(Contour {
                    points: points.into_iter().map(|(x, y)| [x - 1, y - 1]).collect(),
                    kind,
                    parent,
                });
            }

            let fij = f[at(u, v)];
            if fij != 1 {
                lnbd = fij.abs();
            }
        }
    }
    contours
}

fn follow(f: &mut [i32], w: usize, start: (i32, i32), from: (i32, i32), nbd: i32) -> Vec<(i32, i32)> {
    let at = |p: (i32, i32)| (p.1 as usize) * w + p.0 as usize;
    let step = |p: (i32, i32), d: usize| (p.0 + DIRS[d].0, p.1 + DIRS[d].1);

    let d0 = dir_index(from.0 - start.0, from.1 - start.1);
    let first = (0..8)
        .map(|k| (d0 + k) % 8)
        .map(|d| step(start, d))
        .find(|&p| f[at(p)] != 0);
    let Some(first) = first else {
        f[at(start)] = -nbd;
        return vec![start];
    };

    let mut points = Vec::new();
    let mut prev = first;
    let mut cur = start;
    loop {
        points.push(cur);
        let dp = dir_index(prev.0 - cur.0, prev.1 - cur.1);
        let mut east_zero = false;
        let mut next = prev;
        for k in 1..=8 {
            let d = (dp + 8 - k) % 8;
            let p = step(cur, d);
            if f[at(p)] != 0 {
                next = p;
                break;
            }
            if d == 0 {
                east_zero = true;
            }
        }
        if east_zero {
            f[at(cur)] = -nbd;
        } else if f[at(cur)] == 1 {
            f[at(cur)] = nbd;
        }
        if next == start && cur == first {
            break;
        }
        prev = cur;
        cur = next;
    }
    points
}

/// Borders with at least `min_len` chain points.
pub fn trace_contours(image: &Bitmap, min_len: usize) -> Vec<Contour> {
    let all = trace_borders(image);
    // Re-index parents onto the filtered list.
    let mut remap = vec![None; all.len()];
    let mut kept = Vec::new();
    for (i, c) in all.iter().enumerate() {
        if c.len() >= min_len {
            remap[i] = Some(kept.len());
            kept.push(c.clone());
        }
    }
    for c in &mut kept {
        let mut p = c.parent;
        while let Some(pi) = p {
            if remap[pi].is_some() {
                break;
            }
            p = all[pi].parent;
        }
        c.parent = p.and_then(|pi| remap[pi]);
    }
    kept
}
