//! Corner-map post-processing for non-cuboid rooms.
//!
//! Neighbouring corners predicted by the warp tend to fuse into one wide
//! blob. Upper (ceiling) blobs whose width is close to a multiple `m ≥ 2` of
//! the nominal corner width are cut into `m` equal parts by zero-valued
//! column bands; the same bands are cleared in the floor half of the corner
//! map and in the wall–wall channel of the edge map.

use serde::{Deserialize, Serialize};

use crate::raster::{LayoutMaps, Raster, RED};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

/// `1` where `value >= threshold`, else `0`, per channel.
pub fn binarize(map: &Raster, threshold: f64) -> Raster {
    let data = map
        .data()
        .iter()
        .map(|&v| if v >= threshold { 1.0 } else { 0.0 })
        .collect();
    Raster::from_data(map.width(), map.height(), map.channels(), data).expect("same shape")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub label: u32,
    pub pixel_count: usize,
    /// Bounding box in unwrapped columns; `min_x` may be negative or `max_x`
    /// exceed the width when the component straddles the seam.
    pub min_x: isize,
    pub max_x: isize,
    pub min_y: usize,
    pub max_y: usize,
    /// Mean pixel-center position, `x` wrapped into `[0, width)`.
    pub centroid: [f64; 2],
}

impl Component {
    pub fn bbox_width(&self) -> usize {
        (self.max_x - self.min_x + 1) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSet {
    pub width: usize,
    pub height: usize,
    /// Row-major labels, `0` for background, components numbered from 1 in
    /// order of first appearance.
    pub labels: Vec<u32>,
    pub components: Vec<Component>,
}

impl ComponentSet {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn label_at(&self, col: usize, row: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    /// Column offset of `col` relative to `reference`, unwrapped to
    /// `[-width/2, width/2)` when `wrap` is set.
    pub fn unwrap_column(&self, col: usize, reference: usize, wrap: bool) -> isize {
        unwrap_col(col, reference, self.width, wrap)
    }
}

fn unwrap_col(col: usize, reference: usize, width: usize, wrap: bool) -> isize {
    if !wrap {
        return col as isize;
    }
    let w = width as isize;
    let d = (col as isize - reference as isize + w / 2).rem_euclid(w) - w / 2;
    reference as isize + d
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }
}

/// Two-pass labeling of the non-zero pixels of the first channel. With
/// `wrap_x`, columns `0` and `width-1` are neighbours.
pub fn connected_components(binary: &Raster, connectivity: Connectivity, wrap_x: bool) -> ComponentSet {
    let (w, h) = (binary.width(), binary.height());
    let fg = |c: usize, r: usize| binary.get(c, r, 0) > 0.0;
    let mut provisional = vec![0u32; w * h];
    let mut uf = UnionFind { parent: vec![0] };

    let upper_offsets: &[isize] = match connectivity {
        Connectivity::Four => &[0],
        Connectivity::Eight => &[-1, 0, 1],
    };

    for r in 0..h {
        for c in 0..w {
            if !fg(c, r) {
                continue;
            }
            let mut neighbours = Vec::with_capacity(4);
            if c > 0 && provisional[r * w + c - 1] != 0 {
                neighbours.push(provisional[r * w + c - 1]);
            }
            if r > 0 {
                for &dc in upper_offsets {
                    let cc = c as isize + dc;
                    if cc >= 0 && (cc as usize) < w {
                        let l = provisional[(r - 1) * w + cc as usize];
                        if l != 0 {
                            neighbours.push(l);
                        }
                    }
                }
            }
            let label = match neighbours.iter().min() {
                Some(&m) => {
                    for &n in &neighbours {
                        uf.union(m, n);
                    }
                    m
                }
                None => uf.make(),
            };
            provisional[r * w + c] = label;
        }
    }

    if wrap_x && w > 1 {
        for r in 0..h {
            let left = provisional[r * w];
            if left == 0 {
                continue;
            }
            for &dr in upper_offsets {
                let rr = r as isize + dr;
                if rr < 0 || rr as usize >= h {
                    continue;
                }
                let right = provisional[rr as usize * w + w - 1];
                if right != 0 {
                    uf.union(left, right);
                }
            }
        }
    }

    // Final labels in order of first appearance.
    let mut remap = vec![0u32; uf.parent.len()];
    let mut next = 0u32;
    let mut labels = vec![0u32; w * h];
    for (i, &p) in provisional.iter().enumerate() {
        if p == 0 {
            continue;
        }
        let root = uf.find(p) as usize;
        if remap[root] == 0 {
            next += 1;
            remap[root] = next;
        }
        labels[i] = remap[root];
    }

    struct Acc {
        reference: usize,
        count: usize,
        sx: f64,
        sy: f64,
        min_x: isize,
        max_x: isize,
        min_y: usize,
        max_y: usize,
    }
    let mut accs: Vec<Option<Acc>> = (0..next).map(|_| None).collect();
    for r in 0..h {
        for c in 0..w {
            let l = labels[r * w + c];
            if l == 0 {
                continue;
            }
            let acc = accs[(l - 1) as usize].get_or_insert(Acc {
                reference: c,
                count: 0,
                sx: 0.0,
                sy: 0.0,
                min_x: isize::MAX,
                max_x: isize::MIN,
                min_y: usize::MAX,
                max_y: 0,
            });
            let x = unwrap_col(c, acc.reference, w, wrap_x);
            acc.count += 1;
            acc.sx += x as f64 + 0.5;
            acc.sy += r as f64 + 0.5;
            acc.min_x = acc.min_x.min(x);
            acc.max_x = acc.max_x.max(x);
            acc.min_y = acc.min_y.min(r);
            acc.max_y = acc.max_y.max(r);
        }
    }
    let components = accs
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            let a = a.expect("every label has pixels");
            let mut cx = a.sx / a.count as f64;
            if wrap_x {
                cx = cx.rem_euclid(w as f64);
            }
            Component {
                label: i as u32 + 1,
                pixel_count: a.count,
                min_x: a.min_x,
                max_x: a.max_x,
                min_y: a.min_y,
                max_y: a.max_y,
                centroid: [cx, a.sy / a.count as f64],
            }
        })
        .collect();
    ComponentSet {
        width: w,
        height: h,
        labels,
        components,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitParams {
    /// Nominal width of one corner blob, in pixels.
    pub unit_width: f64,
    /// Width of each zero band between split parts, in pixels.
    pub separator: usize,
    /// Allowed deviation of a blob width from the nearest multiple.
    pub tolerance: f64,
    /// Binarization threshold applied to the corner map.
    pub threshold: f64,
    /// Rows above this belong to ceiling corners; `None` means `height / 2`.
    pub horizon_row: Option<f64>,
}

impl Default for SplitParams {
    fn default() -> Self {
        SplitParams {
            unit_width: 75.0,
            separator: 5,
            tolerance: 25.0,
            threshold: 0.5,
            horizon_row: None,
        }
    }
}

/// One upper component that was cut.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub width: usize,
    pub parts: usize,
    /// Zeroed columns, wrapped into `[0, width)`.
    pub gap_columns: Vec<usize>,
}

/// Part multiplicity of a blob `width` pixels wide, if it qualifies for a split.
pub fn split_multiplicity(width: usize, params: &SplitParams) -> Option<usize> {
    let w = width as f64;
    let m = (w / params.unit_width).round();
    if m >= 2.0 && (w - m * params.unit_width).abs() <= params.tolerance {
        Some(m as usize)
    } else {
        None
    }
}

pub fn split_corners(maps: &LayoutMaps, params: &SplitParams) -> LayoutMaps {
    split_corners_with_report(maps, params).0
}

pub fn split_corners_with_report(maps: &LayoutMaps, params: &SplitParams) -> (LayoutMaps, Vec<Split>) {
    let (w, h) = (maps.width(), maps.height());
    let horizon = params.horizon_row.unwrap_or(h as f64 / 2.0);
    let set = connected_components(&binarize(&maps.corner, params.threshold), Connectivity::Eight, true);
    let mut out = maps.clone();
    let mut splits = Vec::new();
    for comp in &set.components {
        if comp.centroid[1] >= horizon {
            continue;
        }
        let width = comp.bbox_width();
        let Some(m) = split_multiplicity(width, params) else {
            continue;
        };
        let sep = params.separator;
        let Some(avail) = width.checked_sub((m - 1) * sep) else {
            continue;
        };
        let (base, rem) = (avail / m, avail % m);
        let mut gaps = Vec::with_capacity((m - 1) * sep);
        let mut x = comp.min_x;
        for part in 0..m {
            x += (base + usize::from(part < rem)) as isize;
            if part + 1 < m {
                for _ in 0..sep {
                    gaps.push(x.rem_euclid(w as isize) as usize);
                    x += 1;
                }
            }
        }
        for &col in &gaps {
            for row in 0..h {
                out.corner.set(col, row, 0, 0.0);
                out.edge.set(col, row, RED, 0.0);
            }
        }
        splits.push(Split {
            width,
            parts: m,
            gap_columns: gaps,
        });
    }
    (out, splits)
}
