//! Ball stencils on the horizontal lattice: exact ball/cell overlaps, point-membership balls,
//! zero-padded convolution and sliding ball maxima.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::numerics::ball_volume;
use crate::numerics::fft::FftNd;
use crate::numerics::gauss_legendre_on;

/// Weights on the offsets {-half..=half}^d, row-major.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub hdim: usize,
    pub half: usize,
    pub weights: Vec<f64>,
}

impl Stencil {
    pub fn width(&self) -> usize {
        2 * self.half + 1
    }

    /// Offsets of a flat stencil index.
    fn offsets(&self, mut idx: usize, out: &mut [i64]) {
        let w = self.width();
        for a in (0..self.hdim).rev() {
            out[a] = (idx % w) as i64 - self.half as i64;
            idx /= w;
        }
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Drop offsets that can never connect two nodes of a lattice with `side` points per axis.
    fn clipped(&self, side: usize) -> Stencil {
        if self.half < side {
            return self.clone();
        }
        let half = side - 1;
        let w_new = 2 * half + 1;
        let mut weights = vec![0.0; w_new.pow(self.hdim as u32)];
        let mut off = vec![0i64; self.hdim];
        for (idx, &v) in self.weights.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            self.offsets(idx, &mut off);
            if off.iter().all(|o| o.unsigned_abs() as usize <= half) {
                let flat = off
                    .iter()
                    .fold(0usize, |acc, &o| acc * w_new + (o + half as i64) as usize);
                weights[flat] = v;
            }
        }
        Stencil {
            hdim: self.hdim,
            half,
            weights,
        }
    }
}

fn chord_primitive(u: f64, r: f64) -> f64 {
    let u = u.clamp(-r, r);
    0.5 * (u * (r * r - u * u).max(0.0).sqrt() + r * r * (u / r).asin())
}

/// Exact area of the disk of radius r about 0 intersected with [x1, x2] × [y1, y2].
pub fn rect_disk_area(r: f64, x1: f64, x2: f64, y1: f64, y2: f64) -> f64 {
    let a = x1.max(-r);
    let b = x2.min(r);
    if a >= b || y1 >= y2 || y1 >= r || y2 <= -r || r <= 0.0 {
        return 0.0;
    }
    let mut cuts = vec![a, b];
    for y in [y1, y2] {
        if y.abs() < r {
            let u = (r * r - y * y).sqrt();
            cuts.push(-u);
            cuts.push(u);
        }
    }
    cuts.retain(|&u| u >= a && u <= b);
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();
    let mut area = 0.0;
    for w in cuts.windows(2) {
        let (u0, u1) = (w[0], w[1]);
        if u1 <= u0 {
            continue;
        }
        let mid = 0.5 * (u0 + u1);
        let s = (r * r - mid * mid).max(0.0).sqrt();
        if y2.min(s) <= y1.max(-s) {
            continue;
        }
        // length = A + B·s(u) on this piece
        let (mut ca, mut cb) = (0.0, 0.0);
        if y2 < s {
            ca += y2;
        } else {
            cb += 1.0;
        }
        if y1 > -s {
            ca -= y1;
        } else {
            cb += 1.0;
        }
        area += ca * (u1 - u0) + cb * (chord_primitive(u1, r) - chord_primitive(u0, r));
    }
    area
}

/// Volume of the ball B_r(0) ⊂ R^d intersected with the box [lo, hi]; exact for d <= 2,
/// Gauss-Legendre over the leading axes above that.
pub fn ball_box_volume(r: f64, lo: &[f64], hi: &[f64]) -> f64 {
    let d = lo.len();
    match d {
        0 => 1.0,
        1 => (hi[0].min(r) - lo[0].max(-r)).max(0.0),
        2 => rect_disk_area(r, lo[0], hi[0], lo[1], hi[1]),
        _ => {
            let a = lo[0].max(-r);
            let b = hi[0].min(r);
            if a >= b {
                return 0.0;
            }
            gauss_legendre_on(24, a, b)
                .into_iter()
                .map(|(z, w)| w * ball_box_volume((r * r - z * z).max(0.0).sqrt(), &lo[1..], &hi[1..]))
                .sum()
        }
    }
}

/// W(d) = |B_r ∩ cell(d)| / h^d with r in units of h; the weights sum to the ball volume.
pub fn overlap_stencil(hdim: usize, r_cells: f64) -> Stencil {
    let half = (r_cells + 0.5).ceil() as usize;
    let w = 2 * half + 1;
    let len = w.pow(hdim as u32);
    let mut weights = vec![0.0; len];
    let mut lo = vec![0.0; hdim];
    let mut hi = vec![0.0; hdim];
    let mut st = Stencil {
        hdim,
        half,
        weights: Vec::new(),
    };
    let mut off = vec![0i64; hdim];
    for (idx, wt) in weights.iter_mut().enumerate() {
        st.offsets(idx, &mut off);
        for a in 0..hdim {
            lo[a] = off[a] as f64 - 0.5;
            hi[a] = off[a] as f64 + 0.5;
        }
        *wt = ball_box_volume(r_cells, &lo, &hi);
    }
    if hdim > 2 {
        // quadrature in the leading axes: restore the exact total
        let exact = ball_volume(hdim) * r_cells.powi(hdim as i32);
        let s: f64 = weights.iter().sum();
        if s > 0.0 {
            weights.iter_mut().for_each(|v| *v *= exact / s);
        }
    }
    st.weights = weights;
    st
}

/// Offsets with |d| < r (strict), each weighted 1/count: the node mean over a ball.
pub fn point_ball_stencil(hdim: usize, r_cells: f64) -> Stencil {
    let half = r_cells.ceil().max(1.0) as usize;
    let w = 2 * half + 1;
    let len = w.pow(hdim as u32);
    let mut st = Stencil {
        hdim,
        half,
        weights: vec![0.0; len],
    };
    let mut off = vec![0i64; hdim];
    let mut count = 0usize;
    for idx in 0..len {
        st.offsets(idx, &mut off);
        let r2: i64 = off.iter().map(|o| o * o).sum();
        if (r2 as f64) < r_cells * r_cells {
            st.weights[idx] = 1.0;
            count += 1;
        }
    }
    let inv = 1.0 / count as f64;
    st.weights.iter_mut().for_each(|v| *v *= inv);
    st
}

/// out(x) = Σ_d W(d) plane(x + d), with the plane extended by zero off the lattice.
pub fn convolve(plane: &[f64], side: usize, st: &Stencil) -> Vec<f64> {
    let d = st.hdim;
    let st = st.clipped(side);
    let nnz = st.weights.iter().filter(|&&v| v != 0.0).count();
    if nnz * plane.len() <= 1 << 22 {
        convolve_direct(plane, side, &st)
    } else {
        convolve_fft(plane, side, d, &st)
    }
}

fn convolve_direct(plane: &[f64], side: usize, st: &Stencil) -> Vec<f64> {
    let d = st.hdim;
    let mut out = vec![0.0; plane.len()];
    let mut off = vec![0i64; d];
    let mut ks = vec![0usize; d];
    for (idx, &w) in st.weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        st.offsets(idx, &mut off);
        'pts: for (p, o) in out.iter_mut().enumerate() {
            let mut rem = p;
            for a in (0..d).rev() {
                ks[a] = rem % side;
                rem /= side;
            }
            let mut src = 0usize;
            for a in 0..d {
                let k = ks[a] as i64 + off[a];
                if k < 0 || k >= side as i64 {
                    continue 'pts;
                }
                src = src * side + k as usize;
            }
            *o += w * plane[src];
        }
    }
    out
}

fn convolve_fft(plane: &[f64], side: usize, d: usize, st: &Stencil) -> Vec<f64> {
    let pad = (side + st.half).next_power_of_two();
    let fft = FftNd::cube(d, pad);
    let zero = Complex64::new(0.0, 0.0);
    let mut a = vec![zero; fft.len()];
    let mut b = vec![zero; fft.len()];
    let mut ks = vec![0usize; d];
    for (p, &v) in plane.iter().enumerate() {
        let mut rem = p;
        for kk in ks.iter_mut().rev() {
            *kk = rem % side;
            rem /= side;
        }
        let flat = ks.iter().fold(0, |acc, &k| acc * pad + k);
        a[flat].re = v;
    }
    let mut off = vec![0i64; d];
    for (idx, &w) in st.weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        st.offsets(idx, &mut off);
        // correlation: out(x) = Σ W(d) a(x + d) = Σ W(−e) a(x − e)
        let flat = off
            .iter()
            .fold(0, |acc, &o| acc * pad + (-o).rem_euclid(pad as i64) as usize);
        b[flat].re += w;
    }
    fft.forward(&mut a);
    fft.forward(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    fft.inverse(&mut a);
    let mut out = vec![0.0; plane.len()];
    for (p, o) in out.iter_mut().enumerate() {
        let mut rem = p;
        for kk in ks.iter_mut().rev() {
            *kk = rem % side;
            rem /= side;
        }
        let flat = ks.iter().fold(0, |acc, &k| acc * pad + k);
        *o = a[flat].re;
    }
    out
}

/// Max over the window [i - w, i + w] clipped to the row.
fn sliding_max(row: &[f64], w: usize, out: &mut [f64]) {
    let n = row.len();
    let mut dq: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    let mut next = 0usize;
    for i in 0..n {
        let hi = (i + w).min(n - 1);
        while next <= hi {
            while let Some(&b) = dq.back() {
                if row[b] <= row[next] {
                    dq.pop_back();
                } else {
                    break;
                }
            }
            dq.push_back(next);
            next += 1;
        }
        let lo = i.saturating_sub(w);
        while let Some(&f) = dq.front() {
            if f < lo {
                dq.pop_front();
            } else {
                break;
            }
        }
        out[i] = row[*dq.front().unwrap()];
    }
}

/// Largest integer offset k >= 0 with k² < rr, if any.
fn chord(rr: f64) -> Option<usize> {
    if rr <= 0.0 {
        return None;
    }
    let mut k = rr.sqrt().ceil() as usize;
    while k > 0 && (k * k) as f64 >= rr {
        k -= 1;
    }
    Some(k)
}

/// out(x) = max over nodes y of the lattice with |y - x| < r (in cells) of plane(y).
pub fn ball_max(plane: &[f64], side: usize, hdim: usize, r_cells: f64) -> Vec<f64> {
    let rr = r_cells * r_cells;
    match hdim {
        1 => {
            let mut out = vec![0.0; side];
            match chord(rr) {
                Some(w) => sliding_max(plane, w, &mut out),
                None => return vec![f64::NEG_INFINITY; side],
            }
            out
        }
        2 => {
            let half = chord(rr).unwrap_or(0);
            let mut rows: HashMap<usize, Vec<f64>> = HashMap::new();
            let mut out = vec![f64::NEG_INFINITY; side * side];
            for dy in -(half as i64)..=(half as i64) {
                let Some(w) = chord(rr - (dy * dy) as f64) else {
                    continue;
                };
                let filtered = rows.entry(w).or_insert_with(|| {
                    let mut f = vec![0.0; side * side];
                    for (src, dst) in plane.chunks(side).zip(f.chunks_mut(side)) {
                        sliding_max(src, w, dst);
                    }
                    f
                });
                for y in 0..side {
                    let ys = y as i64 + dy;
                    if ys < 0 || ys >= side as i64 {
                        continue;
                    }
                    let src = &filtered[ys as usize * side..(ys as usize + 1) * side];
                    let dst = &mut out[y * side..(y + 1) * side];
                    for (o, &v) in dst.iter_mut().zip(src) {
                        if v > *o {
                            *o = v;
                        }
                    }
                }
            }
            out
        }
        _ => {
            let st = point_ball_stencil(hdim, r_cells).clipped(side);
            let mut off = vec![0i64; hdim];
            let mut ks = vec![0usize; hdim];
            let mut out = vec![f64::NEG_INFINITY; plane.len()];
            for (idx, &w) in st.weights.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                st.offsets(idx, &mut off);
                'pts: for (p, o) in out.iter_mut().enumerate() {
                    let mut rem = p;
                    for a in (0..hdim).rev() {
                        ks[a] = rem % side;
                        rem /= side;
                    }
                    let mut src = 0usize;
                    for a in 0..hdim {
                        let k = ks[a] as i64 + off[a];
                        if k < 0 || k >= side as i64 {
                            continue 'pts;
                        }
                        src = src * side + k as usize;
                    }
                    if plane[src] > *o {
                        *o = plane[src];
                    }
                }
            }
            out
        }
    }
}
