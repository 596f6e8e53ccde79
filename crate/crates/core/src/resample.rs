//! Sparse linear maps over the spatial grid.
//!
//! Resizing, augmentation warps, pyramid downsampling and the surrogate
//! autoencoder are all linear in pixel values once their geometric parameters
//! are fixed. A [`SpatialMap`] stores, for every output location, the input
//! locations and weights it reads from. The same weights applied as a
//! scatter-add give the exact vector-Jacobian product.
//!
//! Bilinear sampling uses the half-pixel convention (`align_corners = false`):
//! output pixel `i` of an axis of length `n_out` reads input coordinate
//! `(i + 0.5) * n_in / n_out - 0.5`, clamped to `[0, n_in - 1]`. Coordinates
//! outside the grid therefore replicate the edge pixel. No antialiasing
//! prefilter is applied when shrinking.

use ndarray::Array3;

/// Linear map from an `in_h × in_w` grid to an `out_h × out_w` grid, applied
/// independently to every channel of a `(h, w, c)` array.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialMap {
    in_h: usize,
    in_w: usize,
    out_h: usize,
    out_w: usize,
    // CSR layout: taps of output pixel p live in offsets[p]..offsets[p + 1]
    offsets: Vec<usize>,
    index: Vec<usize>,
    weight: Vec<f64>,
}

impl SpatialMap {
    /// Build from a callback that appends `(input_flat_index, weight)` taps for
    /// each output pixel `(y, x)`.
    pub fn from_taps<F>(in_dims: (usize, usize), out_dims: (usize, usize), mut taps: F) -> Self
    where
        F: FnMut(usize, usize, &mut Vec<(usize, f64)>),
    {
        let (out_h, out_w) = out_dims;
        let mut offsets = Vec::with_capacity(out_h * out_w + 1);
        let mut index = Vec::new();
        let mut weight = Vec::new();
        let mut scratch = Vec::new();
        offsets.push(0);
        for y in 0..out_h {
            for x in 0..out_w {
                scratch.clear();
                taps(y, x, &mut scratch);
                for &(i, w) in &scratch {
                    debug_assert!(i < in_dims.0 * in_dims.1);
                    if w != 0.0 {
                        index.push(i);
                        weight.push(w);
                    }
                }
                offsets.push(index.len());
            }
        }
        SpatialMap {
            in_h: in_dims.0,
            in_w: in_dims.1,
            out_h,
            out_w,
            offsets,
            index,
            weight,
        }
    }

    /// Bilinear resampling of the whole grid to a new size.
    pub fn resize(in_dims: (usize, usize), out_dims: (usize, usize)) -> Self {
        let sy = in_dims.0 as f64 / out_dims.0 as f64;
        let sx = in_dims.1 as f64 / out_dims.1 as f64;
        Self::from_taps(in_dims, out_dims, |y, x, taps| {
            let cy = (y as f64 + 0.5) * sy - 0.5;
            let cx = (x as f64 + 0.5) * sx - 0.5;
            bilinear_taps(in_dims, cy, cx, taps);
        })
    }

    /// Bilinear sampling at arbitrary source coordinates, `coord(y, x)`
    /// returning the continuous `(row, col)` read by output pixel `(y, x)`.
    pub fn warp<F>(in_dims: (usize, usize), out_dims: (usize, usize), mut coord: F) -> Self
    where
        F: FnMut(usize, usize) -> (f64, f64),
    {
        Self::from_taps(in_dims, out_dims, |y, x, taps| {
            let (cy, cx) = coord(y, x);
            bilinear_taps(in_dims, cy, cx, taps);
        })
    }

    /// Box average: every input pixel belongs to exactly one output cell, the
    /// one containing its centre; each cell averages its members.
    pub fn area_pool(in_dims: (usize, usize), out_dims: (usize, usize)) -> Self {
        assert!(out_dims.0 <= in_dims.0 && out_dims.1 <= in_dims.1, "area pool cannot enlarge");
        let members = |n_in: usize, n_out: usize| -> Vec<Vec<usize>> {
            let mut cells = vec![Vec::new(); n_out];
            for i in 0..n_in {
                cells[i * n_out / n_in].push(i);
            }
            cells
        };
        let rows = members(in_dims.0, out_dims.0);
        let cols = members(in_dims.1, out_dims.1);
        Self::from_taps(in_dims, out_dims, |y, x, taps| {
            let w = 1.0 / (rows[y].len() * cols[x].len()) as f64;
            for &i in &rows[y] {
                for &j in &cols[x] {
                    taps.push((i * in_dims.1 + j, w));
                }
            }
        })
    }

    pub fn in_dims(&self) -> (usize, usize) {
        (self.in_h, self.in_w)
    }

    pub fn out_dims(&self) -> (usize, usize) {
        (self.out_h, self.out_w)
    }

    /// Forward application (gather).
    pub fn apply(&self, input: &Array3<f64>) -> Array3<f64> {
        let (h, w, c) = input.dim();
        assert_eq!((h, w), (self.in_h, self.in_w), "spatial map input shape");
        let src = input.as_standard_layout();
        let src = src.as_slice().expect("standard layout");
        let mut out = vec![0.0; self.out_h * self.out_w * c];
        for p in 0..self.out_h * self.out_w {
            let dst = &mut out[p * c..(p + 1) * c];
            for t in self.offsets[p]..self.offsets[p + 1] {
                let (i, wt) = (self.index[t], self.weight[t]);
                for (d, s) in dst.iter_mut().zip(&src[i * c..(i + 1) * c]) {
                    *d += wt * s;
                }
            }
        }
        Array3::from_shape_vec((self.out_h, self.out_w, c), out).expect("shape")
    }

    /// Transpose application (scatter-add): the vector-Jacobian product of
    /// [`apply`](Self::apply).
    pub fn apply_transpose(&self, grad_out: &Array3<f64>) -> Array3<f64> {
        let (h, w, c) = grad_out.dim();
        assert_eq!((h, w), (self.out_h, self.out_w), "spatial map gradient shape");
        let g = grad_out.as_standard_layout();
        let g = g.as_slice().expect("standard layout");
        let mut out = vec![0.0; self.in_h * self.in_w * c];
        for p in 0..self.out_h * self.out_w {
            let src = &g[p * c..(p + 1) * c];
            for t in self.offsets[p]..self.offsets[p + 1] {
                let (i, wt) = (self.index[t], self.weight[t]);
                for (d, s) in out[i * c..(i + 1) * c].iter_mut().zip(src) {
                    *d += wt * s;
                }
            }
        }
        Array3::from_shape_vec((self.in_h, self.in_w, c), out).expect("shape")
    }

    /// True when the map copies every pixel to the same location with weight 1.
    pub fn is_identity(&self) -> bool {
        (self.in_h, self.in_w) == (self.out_h, self.out_w)
            && (0..self.out_h * self.out_w).all(|p| {
                self.offsets[p + 1] - self.offsets[p] == 1
                    && self.index[self.offsets[p]] == p
                    && self.weight[self.offsets[p]] == 1.0
            })
    }
}

/// Append the (at most four) bilinear taps for continuous coordinate
/// `(cy, cx)` with edge replication.
pub(crate) fn bilinear_taps(dims: (usize, usize), cy: f64, cx: f64, taps: &mut Vec<(usize, f64)>) {
    let (h, w) = dims;
    let (y0, y1, fy) = axis_taps(cy, h);
    let (x0, x1, fx) = axis_taps(cx, w);
    let push = |taps: &mut Vec<(usize, f64)>, y: usize, x: usize, wt: f64| {
        let i = y * w + x;
        if let Some(t) = taps.iter_mut().find(|t| t.0 == i) {
            t.1 += wt;
        } else {
            taps.push((i, wt));
        }
    };
    push(taps, y0, x0, (1.0 - fy) * (1.0 - fx));
    push(taps, y0, x1, (1.0 - fy) * fx);
    push(taps, y1, x0, fy * (1.0 - fx));
    push(taps, y1, x1, fy * fx);
}

fn axis_taps(c: f64, n: usize) -> (usize, usize, f64) {
    let max = (n - 1) as f64;
    let c = c.clamp(0.0, max);
    let i0 = c.floor();
    let f = c - i0;
    let i0 = i0 as usize;
    let i1 = (i0 + 1).min(n - 1);
    (i0, i1, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    #[test]
    fn same_size_resize_is_identity() {
        assert!(SpatialMap::resize((9, 13), (9, 13)).is_identity());
        assert!(!SpatialMap::resize((9, 13), (9, 12)).is_identity());
    }

    #[test]
    fn transpose_satisfies_adjoint_identity() {
        let map = SpatialMap::resize((7, 5), (11, 13));
        let x = Array3::from_shape_fn((7, 5, 2), |(i, j, k)| ((i * 31 + j * 7 + k) % 17) as f64 / 17.0);
        let g = Array3::from_shape_fn((11, 13, 2), |(i, j, k)| ((i * 3 + j * 5 + k * 11) % 13) as f64 - 6.0);
        let lhs: f64 = (&map.apply(&x) * &g).sum();
        let rhs: f64 = (&x * &map.apply_transpose(&g)).sum();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn area_pool_averages_blocks() {
        let map = SpatialMap::area_pool((4, 6), (2, 3));
        let x = Array3::from_shape_fn((4, 6, 1), |(i, j, _)| (i * 6 + j) as f64);
        let y = map.apply(&x);
        assert_eq!(y[[0, 0, 0]], (0.0 + 1.0 + 6.0 + 7.0) / 4.0);
        assert_eq!(y[[1, 2, 0]], (16.0 + 17.0 + 22.0 + 23.0) / 4.0);
    }

    #[test]
    fn rows_are_convex_combinations() {
        let map = SpatialMap::resize((17, 23), (40, 9));
        let ones = Array3::from_elem((17, 23, 1), 1.0);
        for v in map.apply(&ones).iter() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }
}
