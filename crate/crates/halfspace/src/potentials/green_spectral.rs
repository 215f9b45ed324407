//! Green potential by horizontal Fourier transform: per frequency the zero-boundary Stokes
//! problem is a two-point ODE system in x_n, solved through its Green functions in closed form.
//!
//! With k = |ξ|, ê = ξ/k and source S = F̂ + iξ_a Ĥ_{·a} + ∂_s Ĥ_{·n}:
//! transverse horizontal velocity uses g(t,s) = (e^{−k|t−s|} − e^{−k(t+s)})/(2k); the
//! longitudinal/normal pair comes from ψ with (k² − ∂²)²ψ = k S_n + ∂_s(i S_L), ψ = ψ' = 0 at 0,
//! through the clamped kernel Γ; then V_n = kψ, V_L = iψ', and the pressure follows from the
//! longitudinal momentum equation. The source is a not-a-knot cubic in s between levels,
//! extended by its tangent down to s = 0 and cut off above the top level, so every integral
//! is an exponential moment of a polynomial.

use num_complex::Complex64 as C;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{HalfSpaceGrid, SampledField};
use crate::numerics::exp_moments;
use crate::numerics::spline::SplineBasis;

use super::conv::PaddedConv;
use super::GreenFields;

const ZERO: C = C { re: 0.0, im: 0.0 };
/// Fraction of source energy allowed in the top horizontal octave.
const TOP_OCTAVE_ENERGY: f64 = 1e-2;

/// Kernel e^{−k|t−s|}(c0 + c1|t−s|) (coefficients for s < t and s > t) plus the image term
/// e^{−k(t+s)}(A + B s) with A = a0 + a1 t, B = b0 + b1 t.
#[derive(Debug, Clone, Copy)]
struct Kern {
    below: (f64, f64),
    above: (f64, f64),
    img: [f64; 4],
}

impl Kern {
    fn dt(self, k: f64) -> [f64; 4] {
        let [a0, a1, b0, b1] = self.img;
        [a1 - k * a0, -k * a1, b1 - k * b0, -k * b1]
    }

    fn ds(self, k: f64) -> [f64; 4] {
        let [a0, a1, b0, b1] = self.img;
        [-k * a0 + b0, -k * a1 + b1, -k * b0, -k * b1]
    }
}

/// Derivatives γ^{(m)} of γ(z) = e^{−k|z|}(1 + k|z|)/(4k³) as (z > 0, z < 0) coefficient pairs.
fn gamma_free(k: f64, m: usize) -> ((f64, f64), (f64, f64)) {
    let k2 = k * k;
    match m {
        0 => {
            let c = (1.0 / (4.0 * k2 * k), 1.0 / (4.0 * k2));
            (c, c)
        }
        1 => ((0.0, -1.0 / (4.0 * k)), (0.0, 1.0 / (4.0 * k))),
        2 => {
            let c = (-1.0 / (4.0 * k), 0.25);
            (c, c)
        }
        3 => ((0.5, -0.25 * k), (-0.5, 0.25 * k)),
        // regular part; the jump of γ''' at 0 is handled by the caller
        4 => {
            let c = (-0.75 * k, 0.25 * k2);
            (c, c)
        }
        _ => unreachable!(),
    }
}

/// ∂_t^d ∂_s^e Γ for the clamped kernel.
fn clamped(k: f64, d: usize, e: usize) -> Kern {
    let (below, above) = gamma_free(k, d + e);
    let sign = if e % 2 == 1 { -1.0 } else { 1.0 };
    let k2 = k * k;
    let mut kern = Kern {
        below: (sign * below.0, sign * below.1),
        above: (sign * above.0, sign * above.1),
        img: [-1.0 / (4.0 * k2 * k), -1.0 / (4.0 * k2), -1.0 / (4.0 * k2), -1.0 / (2.0 * k)],
    };
    for _ in 0..d {
        kern.img = kern.dt(k);
    }
    for _ in 0..e {
        kern.img = kern.ds(k);
    }
    kern
}

fn transverse(k: f64) -> Kern {
    Kern {
        below: (1.0 / (2.0 * k), 0.0),
        above: (1.0 / (2.0 * k), 0.0),
        img: [-1.0 / (2.0 * k), 0.0, 0.0, 0.0],
    }
}

fn transverse_dt(k: f64) -> Kern {
    let mut g = Kern {
        below: (-0.5, 0.0),
        above: (0.5, 0.0),
        img: transverse(k).img,
    };
    g.img = g.dt(k);
    g
}

/// Piece p covers [a_p, a_p + Δ_p]: piece 0 is [0, y_0], piece i is [y_{i−1}, y_i].
struct Pieces {
    a: Vec<f64>,
    delta: Vec<f64>,
}

impl Pieces {
    fn new(levels: &[f64]) -> Self {
        let mut a = vec![0.0];
        let mut delta = vec![levels[0]];
        for w in levels.windows(2) {
            a.push(w[0]);
            delta.push(w[1] - w[0]);
        }
        Self { a, delta }
    }
}

/// ∫_0^Δ e^{−kx} x^r dx and ∫_0^Δ e^{−k(Δ−x)} x^r dx for r = 0..=4.
fn piece_moments(k: f64, delta: f64) -> ([f64; 5], [f64; 5]) {
    let mut m = [0.0; 5];
    exp_moments(-k * delta, 4, &mut m);
    let mut plus = [0.0; 5];
    let mut minus = [0.0; 5];
    let mut dp = delta;
    for r in 0..5 {
        plus[r] = m[r] * dp;
        // ∫_0^1 (1 − v)^r e^{−kΔ v} dv by the binomial expansion
        let mut acc = 0.0;
        let mut binom = 1.0;
        for j in 0..=r {
            let sgn = if j % 2 == 1 { -1.0 } else { 1.0 };
            acc += sgn * binom * m[j];
            binom = binom * (r - j) as f64 / (j + 1) as f64;
        }
        minus[r] = acc * dp;
        dp *= delta;
    }
    (plus, minus)
}

struct Ctx<'a> {
    levels: &'a [f64],
    pieces: Pieces,
    basis: SplineBasis,
}

/// Piecewise-cubic coefficients (local x = s − a_p) of S for every piece.
fn source_pieces(ctx: &Ctx, vals: &[C], hn: &[C]) -> Vec<[C; 4]> {
    let m = ctx.levels.len();
    let mm = ctx.basis.second_derivatives(vals);
    let mut co = ctx.basis.interval_coefficients(vals, &mm);
    let mmh = ctx.basis.second_derivatives(hn);
    let ch = ctx.basis.interval_coefficients(hn, &mmh);
    let mut out = Vec::with_capacity(m);
    // below y0 both splines continue linearly, so the derivative of the hn part is constant
    let (v0, s0) = (co[0][0], co[0][1]);
    out.push([v0 - s0 * ctx.levels[0] + ch[0][1], s0, ZERO, ZERO]);
    for (c, h) in co.iter_mut().zip(&ch) {
        c[0] += h[1];
        c[1] += h[2] * 2.0;
        c[2] += h[3] * 3.0;
    }
    out.extend(co);
    out
}

/// Kernel-independent partial sums of one source: with P_ν = Σ_r c_r E⁻_{r+ν}, Q_ν = Σ_r c_r E⁺_{r+ν},
/// `lo0[j] = Σ_{p≤j} e^{−k(y_j − b_p)} P_0`, `lo1[j]` the same with a_p P_0 + P_1, `hi0/hi1` the
/// analogues over p > j with e^{−k(a_p − y_j)} Q, and `img0/img1` the full sums with e^{−k a_p}.
struct Sums {
    lo0: Vec<C>,
    lo1: Vec<C>,
    hi0: Vec<C>,
    hi1: Vec<C>,
    img0: C,
    img1: C,
}

fn sums(k: f64, ctx: &Ctx, mom: &[([f64; 5], [f64; 5])], src: &[[C; 4]]) -> Sums {
    let m = src.len();
    let mut p = Vec::with_capacity(m);
    let mut q = Vec::with_capacity(m);
    for (c, (plus, minus)) in src.iter().zip(mom) {
        let (mut p0, mut p1, mut q0, mut q1) = (ZERO, ZERO, ZERO, ZERO);
        for r in 0..4 {
            p0 += c[r] * minus[r];
            p1 += c[r] * minus[r + 1];
            q0 += c[r] * plus[r];
            q1 += c[r] * plus[r + 1];
        }
        p.push((p0, p1));
        q.push((q0, q1));
    }
    let a = &ctx.pieces.a;
    let y = ctx.levels;
    let mut lo0 = vec![ZERO; m];
    let mut lo1 = vec![ZERO; m];
    for j in 0..m {
        let (decay, prev0, prev1) = if j == 0 {
            (0.0, ZERO, ZERO)
        } else {
            ((-k * (y[j] - y[j - 1])).exp(), lo0[j - 1], lo1[j - 1])
        };
        lo0[j] = prev0 * decay + p[j].0;
        lo1[j] = prev1 * decay + p[j].0 * a[j] + p[j].1;
    }
    let mut hi0 = vec![ZERO; m];
    let mut hi1 = vec![ZERO; m];
    for j in (0..m.saturating_sub(1)).rev() {
        let decay = (-k * (y[j + 1] - y[j])).exp();
        hi0[j] = q[j + 1].0 + hi0[j + 1] * decay;
        hi1[j] = q[j + 1].0 * a[j + 1] + q[j + 1].1 + hi1[j + 1] * decay;
    }
    let (mut img0, mut img1) = (ZERO, ZERO);
    for (pp, qq) in q.iter().enumerate() {
        let e = (-k * a[pp]).exp();
        img0 += qq.0 * e;
        img1 += (qq.0 * a[pp] + qq.1) * e;
    }
    Sums { lo0, lo1, hi0, hi1, img0, img1 }
}

/// ∫ K(t, s) S(s) ds at t = y_j from the partial sums.
fn apply(k: f64, t: f64, j: usize, s: &Sums, kern: &Kern) -> C {
    let (c0, c1) = kern.below;
    let below = s.lo0[j] * (c0 + c1 * t) - s.lo1[j] * c1;
    let (c0, c1) = kern.above;
    let above = s.hi0[j] * (c0 - c1 * t) + s.hi1[j] * c1;
    let [a0, a1, b0, b1] = kern.img;
    let img = (s.img0 * (a0 + a1 * t) + s.img1 * (b0 + b1 * t)) * (-k * t).exp();
    below + above + img
}

/// K(t, s) at a single s >= t (the two one-sided values are averaged at s = t).
fn point(k: f64, t: f64, s: f64, kern: &Kern) -> f64 {
    let r = s - t;
    let (c0, c1) = kern.above;
    let mut free = (-k * r).exp() * (c0 + c1 * r);
    if r == 0.0 {
        free = 0.5 * (free + kern.below.0);
    }
    let [a0, a1, b0, b1] = kern.img;
    free + (-k * (t + s)).exp() * ((a0 + a1 * t) + (b0 + b1 * t) * s)
}

#[cfg(test)]
fn integrate(k: f64, t: f64, j: usize, ctx: &Ctx, mom: &[([f64; 5], [f64; 5])], src: &[[C; 4]], kern: &Kern) -> C {
    let [a0, a1, b0, b1] = kern.img;
    let (ia, ib) = (a0 + a1 * t, b0 + b1 * t);
    let mut acc = ZERO;
    for (p, c) in src.iter().enumerate() {
        let a = ctx.pieces.a[p];
        let b = a + ctx.pieces.delta[p];
        let (plus, minus) = &mom[p];
        let mut local = ZERO;
        if p <= j {
            let (c0, c1) = kern.below;
            let alpha = c0 + c1 * (t - a);
            let mut s = ZERO;
            for r in 0..4 {
                s += c[r] * (alpha * minus[r] - c1 * minus[r + 1]);
            }
            local += s * (-k * (t - b)).exp();
        } else {
            let (c0, c1) = kern.above;
            let beta = c0 + c1 * (a - t);
            let mut s = ZERO;
            for r in 0..4 {
                s += c[r] * (beta * plus[r] + c1 * plus[r + 1]);
            }
            local += s * (-k * (a - t)).exp();
        }
        let lin = ia + ib * a;
        let mut s = ZERO;
        for r in 0..4 {
            s += c[r] * (lin * plus[r] + ib * plus[r + 1]);
        }
        local += s * (-k * (t + a)).exp();
        acc += local;
    }
    acc
}

/// ∫ min(t, s) p(s) ds and ∫_t^∞ p(s) ds over the pieces.
fn mean_mode(j: usize, t: f64, ctx: &Ctx, src: &[[C; 4]]) -> (C, C) {
    let mut v = ZERO;
    let mut above = ZERO;
    for (p, c) in src.iter().enumerate() {
        let a = ctx.pieces.a[p];
        let d = ctx.pieces.delta[p];
        let mut plain = ZERO;
        let mut first = ZERO;
        let mut dp = d;
        for (r, cr) in c.iter().enumerate() {
            plain += *cr * (dp / (r + 1) as f64);
            first += *cr * (dp * d / (r + 2) as f64);
            dp *= d;
        }
        if p <= j {
            v += plain * a + first;
        } else {
            v += plain * t;
            above += plain;
        }
    }
    (v, above)
}

/// Solve one frequency. `input` holds n source columns then n Ĥ_{·n} columns (levels inner);
/// `out` receives, per level, v (n), w, then ∂_b v_i at i·n + b when `nout` includes them.
fn solve_bin(ctx: &Ctx, xi: &[f64], input: &[C], out: &mut [C], nout: usize) {
    let m = ctx.levels.len();
    let n = xi.len() + 1;
    let d = n - 1;
    let derivs = nout > n + 1;
    let srcs: Vec<Vec<[C; 4]>> = (0..n)
        .map(|i| source_pieces(ctx, &input[i * m..(i + 1) * m], &input[(n + i) * m..(n + i + 1) * m]))
        .collect();
    let k = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    let iu = C::new(0.0, 1.0);
    // H is cut off above the top level: its vertical derivative carries −Ĥ_{·n}(T) δ_T
    let top = ctx.levels[m - 1];
    let tail: Vec<C> = (0..n).map(|i| -input[(n + i) * m + m - 1]).collect();

    if k == 0.0 {
        for (j, &t) in ctx.levels.iter().enumerate() {
            let o = &mut out[j * nout..(j + 1) * nout];
            let half = if j + 1 == m { 0.5 } else { 1.0 };
            for a in 0..d {
                let (v, dv) = mean_mode(j, t, ctx, &srcs[a]);
                o[a] = v + tail[a] * t;
                if derivs {
                    o[n + 1 + a * n + d] = dv + tail[a] * half;
                }
            }
            o[d] = ZERO;
            let (_, pn) = mean_mode(j, t, ctx, &srcs[d]);
            o[n] = -pn - tail[d] * half;
        }
        return;
    }

    let e: Vec<f64> = xi.iter().map(|x| x / k).collect();
    let mom: Vec<_> = ctx.pieces.delta.iter().map(|&dl| piece_moments(k, dl)).collect();
    // longitudinal source S_U = i ê·S'
    let su: Vec<[C; 4]> = (0..m)
        .map(|p| {
            let mut c = [ZERO; 4];
            for a in 0..d {
                for r in 0..4 {
                    c[r] += srcs[a][p][r] * (e[a] * iu);
                }
            }
            c
        })
        .collect();
    let tail_u: C = (0..d).map(|a| tail[a] * (e[a] * iu)).sum();
    let g = transverse(k);
    let gt = transverse_dt(k);
    let gam: Vec<(Kern, Kern)> = (0..4).map(|dd| (clamped(k, dd, 0), clamped(k, dd, 1))).collect();
    let sh: Vec<Sums> = (0..d).map(|a| sums(k, ctx, &mom, &srcs[a])).collect();
    let sn = sums(k, ctx, &mom, &srcs[d]);
    let sus = sums(k, ctx, &mom, &su);

    for (j, &t) in ctx.levels.iter().enumerate() {
        let o = &mut out[j * nout..(j + 1) * nout];
        let mut psi = [ZERO; 4];
        for (dd, p) in psi.iter_mut().enumerate() {
            if dd == 2 && !derivs {
                continue;
            }
            let (k0, k1) = &gam[dd];
            *p = (apply(k, t, j, &sn, k0) + tail[d] * point(k, t, top, k0)) * k
                - (apply(k, t, j, &sus, k1) + tail_u * point(k, t, top, k1));
        }
        let ig: Vec<C> = (0..d).map(|a| apply(k, t, j, &sh[a], &g) + tail[a] * point(k, t, top, &g)).collect();
        let il: C = (0..d).map(|a| ig[a] * e[a]).sum();
        let vl = iu * psi[1];
        for a in 0..d {
            o[a] = ig[a] - il * e[a] + vl * e[a];
        }
        o[d] = psi[0] * k;
        o[n] = (psi[3] - psi[1] * (k * k)) / k;
        if derivs {
            let igt: Vec<C> = (0..d).map(|a| apply(k, t, j, &sh[a], &gt) + tail[a] * point(k, t, top, &gt)).collect();
            let ilt: C = (0..d).map(|a| igt[a] * e[a]).sum();
            let vlt = iu * psi[2];
            for i in 0..n {
                let vi = o[i];
                for b in 0..d {
                    o[n + 1 + i * n + b] = vi * (iu * xi[b]);
                }
            }
            for a in 0..d {
                o[n + 1 + a * n + d] = igt[a] - ilt * e[a] + vlt * e[a];
            }
            o[n + 1 + d * n + d] = psi[1] * k;
        }
    }
}

pub(crate) fn check_sources(f: &SampledField, h: &SampledField) -> Result<()> {
    if f.rank != 1 || h.rank != 2 {
        return Err(Error::Shape("F must be a vector field and H a 2-tensor field".into()));
    }
    if f.grid != h.grid {
        return Err(Error::Shape("F and H live on different grids".into()));
    }
    Ok(())
}

/// Spectral evaluation of (𝒢(F,H), Ψ(F,H)); `pad` is the horizontal zero-padding factor.
pub fn green_spectral(f: &SampledField, h: &SampledField, pad: usize, derivatives: bool) -> Result<GreenFields> {
    check_sources(f, h)?;
    let grid: &HalfSpaceGrid = &f.grid;
    let n = grid.dim;
    let d = n - 1;
    let m = grid.nlevels();
    let nout = if derivatives { n + 1 + n * n } else { n + 1 };
    if f.is_zero() && h.is_zero() {
        return Ok(GreenFields::zeros(grid, derivatives));
    }
    if m < 2 {
        return Err(Error::InvalidGrid("the spectral path needs at least two levels".into()));
    }
    let pc = PaddedConv::with_factor(&grid.lattice, pad);
    let nb = pc.len();
    let p = pc.pad();
    let step = grid.step();
    let mut off = vec![0i64; d];
    let xis: Vec<Vec<f64>> = (0..nb)
        .map(|b| {
            pc.offsets(b, &mut off);
            off.iter().map(|&o| 2.0 * std::f64::consts::PI * o as f64 / (p as f64 * step)).collect()
        })
        .collect();
    let nyquist: Vec<bool> = (0..nb)
        .map(|b| {
            pc.offsets(b, &mut off);
            off.iter().any(|&o| o.unsigned_abs() as usize * 2 == p)
        })
        .collect();
    let top: Vec<bool> = (0..nb)
        .map(|b| {
            pc.offsets(b, &mut off);
            off.iter().any(|&o| o.unsigned_abs() as usize * 4 > p)
        })
        .collect();

    // bin-major input: [bin][column][level], columns = n sources then n Ĥ_{·n}
    let width = 2 * n * m;
    let mut input = vec![ZERO; nb * width];
    let (mut e_all, mut e_top) = (0.0, 0.0);
    let mut put = |col: usize, level: usize, spec: &[C], mul: &dyn Fn(usize) -> C| {
        for (b, v) in spec.iter().enumerate() {
            input[b * width + col * m + level] += *v * mul(b);
        }
    };
    let one = |_: usize| C::new(1.0, 0.0);
    for level in 0..m {
        for i in 0..n {
            let plane = f.component_plane(level, i);
            if plane.iter().any(|&v| v != 0.0) {
                let spec = pc.forward_plane(&plane);
                tally(&spec, &top, &mut e_all, &mut e_top);
                put(i, level, &spec, &one);
            }
            for a in 0..n {
                let plane = h.component_plane(level, i * n + a);
                if plane.iter().all(|&v| v == 0.0) {
                    continue;
                }
                let spec = pc.forward_plane(&plane);
                tally(&spec, &top, &mut e_all, &mut e_top);
                if a == d {
                    put(n + i, level, &spec, &one);
                } else {
                    let mul = |b: usize| {
                        if nyquist[b] {
                            ZERO
                        } else {
                            C::new(0.0, xis[b][a])
                        }
                    };
                    put(i, level, &spec, &mul);
                }
            }
        }
    }
    if e_top > TOP_OCTAVE_ENERGY * e_all {
        return Err(Error::Resolution(format!(
            "source energy fraction {:.3e} in the top horizontal octave",
            e_top / e_all
        )));
    }

    let ctx = Ctx {
        levels: &grid.levels,
        pieces: Pieces::new(&grid.levels),
        basis: SplineBasis::new(&grid.levels),
    };
    let mut out = vec![ZERO; nb * m * nout];
    out.par_chunks_mut(m * nout)
        .zip(input.par_chunks(width))
        .enumerate()
        .for_each(|(b, (o, inp))| {
            if !nyquist[b] {
                solve_bin(&ctx, &xis[b], inp, o, nout);
            }
        });

    let mut res = GreenFields::zeros(grid, derivatives);
    let mut spec = vec![ZERO; nb];
    for level in 0..m {
        for c in 0..nout {
            for (b, s) in spec.iter_mut().enumerate() {
                *s = out[b * m * nout + level * nout + c];
            }
            let plane = pc.extract(spec.clone());
            if c < n {
                res.v.set_component_plane(level, c, &plane);
            } else if c == n {
                res.w.set_component_plane(level, 0, &plane);
            } else if let Some(g) = res.grad_v.as_mut() {
                g.set_component_plane(level, c - n - 1, &plane);
            }
        }
    }
    res.normalize_pressure();
    Ok(res)
}

fn tally(spec: &[C], top: &[bool], all: &mut f64, hi: &mut f64) {
    for (v, &t) in spec.iter().zip(top) {
        let e = v.norm_sqr();
        *all += e;
        if t {
            *hi += e;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed forms of Γ and g, differentiated numerically, against the kernel tables.
    fn gamma_exact(k: f64, t: f64, s: f64) -> f64 {
        let z = (t - s).abs();
        ((-k * z).exp() * (1.0 + k * z) - (-k * (t + s)).exp() * (1.0 + k * t + k * s + 2.0 * k * k * t * s))
            / (4.0 * k * k * k)
    }

    fn eval(kern: &Kern, k: f64, t: f64, s: f64) -> f64 {
        let z = t - s;
        let (c0, c1) = if z > 0.0 { kern.below } else { kern.above };
        let [a0, a1, b0, b1] = kern.img;
        (-k * z.abs()).exp() * (c0 + c1 * z.abs()) + (-k * (t + s)).exp() * (a0 + a1 * t + (b0 + b1 * t) * s)
    }

    #[test]
    fn kernel_tables_match_closed_form() {
        let k = 1.7;
        let eps = 1e-3;
        let fd = |f: &dyn Fn(f64, f64) -> f64, t: f64, s: f64, dt: usize, ds: usize| -> f64 {
            // central differences, 4th order in each variable
            let w = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
            let w2 = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
            let pick = |o: usize| match o {
                0 => [0.0, 0.0, 1.0, 0.0, 0.0],
                1 => w,
                _ => w2,
            };
            let (wt, ws) = (pick(dt), pick(ds));
            let mut acc = 0.0;
            for (a, &x) in wt.iter().enumerate() {
                for (b, &y) in ws.iter().enumerate() {
                    if x * y != 0.0 {
                        acc += x * y * f(t + (a as f64 - 2.0) * eps, s + (b as f64 - 2.0) * eps);
                    }
                }
            }
            acc / eps.powi((dt + ds) as i32)
        };
        let gam = |t: f64, s: f64| gamma_exact(k, t, s);
        for &(t, s) in &[(0.7, 0.3), (0.3, 0.9), (1.2, 1.25)] {
            assert!((eval(&clamped(k, 0, 0), k, t, s) - gam(t, s)).abs() < 1e-14);
            for (d, e) in [(1, 0), (2, 0), (0, 1), (1, 1)] {
                let want = fd(&gam, t, s, d, e);
                let got = eval(&clamped(k, d, e), k, t, s);
                assert!((got - want).abs() < 1e-6, "d{d} e{e}: {got} vs {want}");
            }
            let dt2 = |t: f64, s: f64| eval(&clamped(k, 2, 0), k, t, s);
            let d2s = |t: f64, s: f64| eval(&clamped(k, 2, 1), k, t, s);
            assert!((eval(&clamped(k, 3, 0), k, t, s) - fd(&dt2, t, s, 1, 0)).abs() < 1e-6);
            assert!((eval(&clamped(k, 3, 1), k, t, s) - fd(&d2s, t, s, 1, 0)).abs() < 1e-6);
            let g = |t: f64, s: f64| ((-k * (t - s).abs()).exp() - (-k * (t + s)).exp()) / (2.0 * k);
            assert!((eval(&transverse(k), k, t, s) - g(t, s)).abs() < 1e-14);
            assert!((eval(&transverse_dt(k), k, t, s) - fd(&g, t, s, 1, 0)).abs() < 1e-7);
        }
    }

    #[test]
    fn moments_match_quadrature() {
        for &(k, dl) in &[(0.01, 0.3), (3.0, 0.5), (80.0, 1.5)] {
            let (plus, minus) = piece_moments(k, dl);
            for r in 0..5 {
                // split where the exponential varies
                let cuts = [0.0, dl / 64.0, dl / 16.0, dl / 4.0, dl];
                let quad = |f: &dyn Fn(f64) -> f64| -> f64 {
                    cuts.windows(2).map(|w| crate::numerics::integrate(f, w[0], w[1], 1e-14)).sum()
                };
                let p = quad(&|x: f64| (-k * x).exp() * x.powi(r as i32));
                let q = quad(&|x: f64| (-k * x).exp() * (dl - x).powi(r as i32));
                assert!((plus[r] - p).abs() < 1e-12 * p.abs().max(1e-300) + 1e-16, "{k} {r}");
                assert!((minus[r] - q).abs() < 1e-10 * q.abs() + 1e-16, "{k} {r} {} {q}", minus[r]);
            }
        }
    }

    #[test]
    fn integrate_matches_quadrature_of_piecewise_source() {
        let levels = [0.2, 0.35, 0.6, 1.0, 1.7, 2.5];
        let ctx = Ctx {
            levels: &levels,
            pieces: Pieces::new(&levels),
            basis: SplineBasis::new(&levels),
        };
        let src_fn = |s: f64| (1.0 + s) * (-s).exp();
        let vals: Vec<C> = levels.iter().map(|&s| C::new(src_fn(s), 0.0)).collect();
        let zeros = vec![ZERO; levels.len()];
        let src = source_pieces(&ctx, &vals, &zeros);
        let eval_src = |s: f64| -> f64 {
            let p = ctx.pieces.a.iter().rposition(|&a| a <= s).unwrap();
            let x = s - ctx.pieces.a[p];
            let c = &src[p];
            (c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x).re
        };
        let k = 2.3;
        let mom: Vec<_> = ctx.pieces.delta.iter().map(|&dl| piece_moments(k, dl)).collect();
        for kern in [transverse(k), clamped(k, 1, 1), clamped(k, 3, 0)] {
            for (j, &t) in levels.iter().enumerate() {
                let got = integrate(k, t, j, &ctx, &mom, &src, &kern).re;
                let fast = apply(k, t, j, &sums(k, &ctx, &mom, &src), &kern).re;
                assert!((fast - got).abs() < 1e-12 * (1.0 + got.abs()), "{fast} {got}");
                let mut want = crate::numerics::integrate(|s| eval(&kern, k, t, s) * eval_src(s), 0.0, t, 1e-13);
                want += crate::numerics::integrate(|s| eval(&kern, k, t, s) * eval_src(s), t, 2.5, 1e-13);
                assert!((got - want).abs() < 1e-10 * (1.0 + want.abs()), "{got} {want}");
            }
        }
    }
}

#[cfg(test)]
mod pde {
    use super::*;
    use crate::diffops::stokes_residual;
    use crate::grid::{capped_levels, sample};

    pub(crate) fn bump3(x: &[f64], c: [f64; 3], r: f64) -> f64 {
        let s = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2)) / (r * r);
        if s < 1.0 {
            (-1.0 / (1.0 - s)).exp()
        } else {
            0.0
        }
    }

    fn setup() -> (HalfSpaceGrid, SampledField) {
        let levels = capped_levels(1.0 / 256.0, 4.0, 2f64.sqrt(), 0.1);
        let g = HalfSpaceGrid::with_levels(3, 4.0, 1.0 / 8.0, levels).unwrap();
        let f = sample(&g, 1, |x, o| {
            let b = bump3(x, [0.2, -0.1, 1.5], 1.2);
            o[0] = b;
            o[1] = -0.5 * b;
            o[2] = 0.8 * b;
        })
        .unwrap();
        (g, f)
    }

    #[test]
    fn solves_forced_stokes_with_zero_wall_value() {
        let (g, f) = setup();
        let h = SampledField::zeros(&g, 2);
        let r = green_spectral(&f, &h, 2, true).unwrap();
        let rep = stokes_residual(&r.v, &r.w, r.grad_v.as_ref(), Some(&f), false, 0.5).unwrap();
        assert!(rep.momentum_rel() < 1e-2, "{rep:?}");
        assert!(rep.divergence_rel() < 1e-6, "{rep:?}");
        let wall = (0..g.nh()).flat_map(|p| (0..3).map(move |i| (p, i))).fold(0.0f64, |m, (p, i)| m.max(r.v.at(0, p, i).abs()));
        assert!(wall < 1e-2 * r.v.max_abs(), "{wall} {}", r.v.max_abs());
    }

    #[test]
    fn divergence_form_source_matches_explicit_forcing() {
        // H = φ·I has div H = ∇φ, a pure gradient: the velocity vanishes and Ψ = φ up to a constant
        let (g, _) = setup();
        let phi = |x: &[f64]| bump3(x, [0.0, 0.3, 1.5], 1.2);
        let h = sample(&g, 2, |x, o| {
            let p = phi(x);
            for i in 0..3 {
                o[i * 3 + i] = p;
            }
        })
        .unwrap();
        let f = SampledField::zeros(&g, 1);
        let r = green_spectral(&f, &h, 2, false).unwrap();
        let pmax = h.max_abs();
        assert!(r.v.max_abs() < 2e-3 * pmax, "{}", r.v.max_abs());
        let top = g.nlevels() - 1;
        let mut x = [0.0; 3];
        for k in 0..top {
            for p in (0..g.nh()).step_by(37) {
                g.point(k, p, &mut x);
                let shift = r.w.at(top, 0, 0) - phi(&[-4.0, -4.0, g.levels[top]]);
                assert!((r.w.at(k, p, 0) - shift - phi(&x)).abs() < 5e-3 * pmax);
            }
        }
    }
}
#[cfg(test)]
mod ode {
    use super::*;
    use crate::numerics::fd::fornberg;

    /// One frequency in n = 2 on a fine uniform ladder: momentum and continuity by differences.
    #[test]
    fn per_frequency_ode_residual() {
        let levels: Vec<f64> = (0..400).map(|i| 0.01 + i as f64 * 0.01).collect();
        let m = levels.len();
        let ctx = Ctx {
            levels: &levels,
            pieces: Pieces::new(&levels),
            basis: SplineBasis::new(&levels),
        };
        let k = 1.3;
        let s1 = |s: f64| s * s * (-2.0 * (s - 1.0).powi(2)).exp();
        let s2 = |s: f64| s * (-3.0 * (s - 1.2).powi(2)).exp();
        let mut input = vec![ZERO; 4 * m];
        for (j, &s) in levels.iter().enumerate() {
            input[j] = C::new(s1(s), 0.0);
            input[m + j] = C::new(0.0, s2(s));
        }
        let nout = 3 + 4;
        let mut out = vec![ZERO; m * nout];
        solve_bin(&ctx, &[k], &input, &mut out, nout);
        let at = |j: usize, c: usize| out[j * nout + c];
        let iu = C::new(0.0, 1.0);
        for j in (20..300).step_by(23) {
            let xs = &levels[j - 3..=j + 3];
            let w1 = fornberg(levels[j], xs, 1);
            let w2 = fornberg(levels[j], xs, 2);
            let d = |c: usize, w: &[f64]| -> C { (0..7).map(|q| at(j - 3 + q, c) * w[q]).sum() };
            let r1 = at(j, 0) * (k * k) - d(0, &w2) + iu * k * at(j, 2) - input[j];
            let r2 = at(j, 1) * (k * k) - d(1, &w2) + d(2, &w1) - input[m + j];
            let div = iu * k * at(j, 0) + d(1, &w1);
            assert!(r1.norm() < 1e-8 && r2.norm() < 1e-8, "{r1} {r2}");
            assert!(div.norm() < 1e-10);
            // ∂_t outputs agree with differences of the values
            assert!((at(j, 3 + 3) - d(1, &w1)).norm() < 1e-10);
            assert!((at(j, 3 + 1) - d(0, &w1)).norm() < 1e-10);
        }
    }
}
