//! The quintic nonlinearity in Fourier space, the resonant term and the
//! J₁–J₇ decomposition of F(|u|⁴u) away from its resonant part.
//!
//! Every J_k is implemented as a 5-linear form in slots (f₁, …, f₅), with
//! slots 2 and 4 entering conjugated, so that J_k(u) = J_k(u, u, u, u, u).
//! The same code then serves the split by randomness pattern.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{good_size, Grid3};
use crate::field::FourierField;
use crate::lattice::Freq;

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);

/// Mode budget of the brute-force quintic sum.
pub const BRUTE_FORCE_MODES: usize = 130;

/// Coefficients of the conjugate function ū: b_k = conj(a_{−k}).
fn conj_field(a: &FourierField) -> FourierField {
    a.conj_reflect()
}

/// Direct-sum convolution (a ⋆ b)(n) = Σ_{k+l=n} a_k b_l.
pub fn convolve(a: &FourierField, b: &FourierField) -> FourierField {
    let mut out = FourierField::zeros(a.n_max() + b.n_max());
    let sb = b.support();
    for (k, ak) in a.support() {
        for &(l, bl) in &sb {
            let i = out.index(k + l).unwrap();
            out.coefficients_mut()[i] += ak * bl;
        }
    }
    out
}

/// F(|u|⁴u)(n) = Σ_{n₁−n₂+n₃−n₄+n₅=n} a₁ā₂a₃ā₄a₅ by direct summation, staged
/// as four pairwise convolutions so each partial sum is still exact.
pub fn quintic_fourier_bruteforce(u: &FourierField) -> Result<FourierField> {
    if u.len() > BRUTE_FORCE_MODES {
        return Err(Error::BudgetExceeded {
            what: "brute-force quintic sum (modes)".into(),
            needed: u.len() as f64,
            budget: BRUTE_FORCE_MODES as f64,
        });
    }
    let b = conj_field(u);
    let s = convolve(&convolve(&convolve(&convolve(u, &b), u), &b), u);
    Ok(s.resized(5 * u.n_max()))
}

/// Same convolution through a zero-padded physical grid (M ≥ 10·N_max + 1,
/// so |u|⁴u is resolved without aliasing).
pub fn quintic_fourier_fft(u: &FourierField) -> FourierField {
    let grid = Grid3::for_product(u.n_max(), 5);
    let vals: Vec<C> = grid.synthesize(u).into_iter().map(|v| v * v.norm_sqr() * v.norm_sqr()).collect();
    grid.analyze(&vals, 5 * u.n_max())
}

/// m = Σ|a_n|².
pub fn mass(u: &FourierField) -> f64 {
    u.mass()
}

/// ∫|u|⁴ under the normalized measure, exact on a grid with M ≥ 4N_max+1.
pub fn quartic_integral(u: &FourierField) -> f64 {
    let grid = Grid3::new(good_size(4 * u.n_max() + 1));
    let vals = grid.synthesize(u);
    grid.mean(&vals, |v| v.norm_sqr() * v.norm_sqr())
}

/// β = 3∫|u|⁴.
pub fn beta(u: &FourierField) -> f64 {
    3.0 * quartic_integral(u)
}

/// N(v) = λ(|v|⁴v − 3v∫|v|⁴) on the cube of radius 5N_max.
pub fn gauged_nonlinearity(v: &FourierField, lambda: f64) -> FourierField {
    let q = quartic_integral(v);
    let f = quintic_fourier_fft(v);
    let n = f.n_max();
    FourierField::from_fn(n, |k| lambda * (f.get(k) - 3.0 * q * v.get(k)))
}

/// How the constrained 5-fold sum J₁ is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SumStrategy {
    /// Enumeration when the tuple count is small, inclusion–exclusion otherwise.
    #[default]
    Auto,
    /// Walk every 5-tuple and test the ≠-constraints.
    Enumerate,
    /// Expand Π(1 − [n_a = n_b]) and sum each collapsed pattern directly.
    InclusionExclusion,
}

/// Tuple budget for literal enumeration of J₁ under `SumStrategy::Auto`.
pub const J1_ENUMERATION_BUDGET: f64 = 5e7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JDecomposition {
    /// J₁ … J₇ on the cube of radius 5N_max.
    pub j: Vec<FourierField>,
    /// 3 a_n ∫|u|⁴
    pub resonant: FourierField,
    pub mass: f64,
    pub quartic: f64,
}

impl JDecomposition {
    pub fn sum_j(&self) -> FourierField {
        let mut acc = FourierField::zeros(self.resonant.n_max());
        for part in &self.j {
            acc = acc.add(part);
        }
        acc
    }

    /// Σ J_k + resonant.
    pub fn total(&self) -> FourierField {
        self.sum_j().add(&self.resonant)
    }
}

/// Slot coefficient: slots 2 and 4 (indices 1 and 3) enter conjugated.
#[derive(Clone)]
struct Slots {
    s: [Vec<(Freq, C)>; 5],
    f: [FourierField; 5],
}

impl Slots {
    fn new(f: [&FourierField; 5]) -> Self {
        let conj = |i: usize| i % 2 == 1;
        let f: [FourierField; 5] =
            std::array::from_fn(|i| if conj(i) { f[i].map(|_, c| c.conj()) } else { f[i].clone() });
        let s = std::array::from_fn(|i| f[i].support());
        Slots { s, f }
    }

    fn n_in(&self) -> usize {
        self.f.iter().map(|f| f.n_max()).max().unwrap()
    }

    /// c_i(k) for 1-based slot label i.
    fn c(&self, i: usize, k: Freq) -> C {
        self.f[i - 1].get(k)
    }

    fn supp(&self, i: usize) -> &[(Freq, C)] {
        &self.s[i - 1]
    }

    /// Σ_k c_a(k) c_b(k).
    fn pair_sum(&self, a: usize, b: usize) -> C {
        self.supp(a).iter().map(|&(k, v)| v * self.c(b, k)).sum()
    }
}

fn accumulate(out: &mut FourierField, n: Freq, v: C) {
    if let Some(i) = out.index(n) {
        out.coefficients_mut()[i] += v;
    }
}

/// Σ_{n=n₁−n₂+n₃} over slot labels (p, q, r) with pointwise multipliers on each
/// index; `exclude` drops tuples with n_p = n_q or n_r = n_q.
fn triple_sum(
    out: &mut FourierField,
    weight: C,
    a: &dyn Fn(Freq) -> C,
    b: &dyn Fn(Freq) -> C,
    c: &dyn Fn(Freq) -> C,
    supp: (&[(Freq, C)], &[(Freq, C)], &[(Freq, C)]),
    exclude: bool,
) {
    let va: Vec<(Freq, C)> = supp.0.iter().map(|&(k, _)| (k, a(k))).filter(|x| x.1 != ZERO).collect();
    let vb: Vec<(Freq, C)> = supp.1.iter().map(|&(k, _)| (k, b(k))).filter(|x| x.1 != ZERO).collect();
    let vc: Vec<(Freq, C)> = supp.2.iter().map(|&(k, _)| (k, c(k))).filter(|x| x.1 != ZERO).collect();
    for &(n1, x1) in &va {
        for &(n2, x2) in &vb {
            if exclude && n1 == n2 {
                continue;
            }
            let p = weight * x1 * x2;
            let base = n1 - n2;
            for &(n3, x3) in &vc {
                if exclude && n3 == n2 {
                    continue;
                }
                accumulate(out, base + n3, p * x3);
            }
        }
    }
}

/// One J_k as a 5-linear form on the given slots.
fn j_term(k: usize, sl: &Slots, strategy: SumStrategy) -> FourierField {
    let n_out = 5 * sl.n_in();
    let mut out = FourierField::zeros(n_out);
    match k {
        1 => return j1(sl, strategy),
        2 => {
            let m = sl.pair_sum(4, 5);
            let (c1, c2, c3) = (|x: Freq| sl.c(1, x), |x: Freq| sl.c(2, x), |x: Freq| sl.c(3, x));
            triple_sum(&mut out, 6.0 * m, &c1, &c2, &c3, (sl.supp(1), sl.supp(2), sl.supp(3)), true);
        }
        3 => {
            let a = |x: Freq| sl.c(1, x) * sl.c(4, x) * sl.c(5, x);
            let (c1, c2, c3) = (|x: Freq| sl.c(1, x), |x: Freq| sl.c(2, x), |x: Freq| sl.c(3, x));
            triple_sum(&mut out, C::new(-6.0, 0.0), &a, &c2, &c3, (sl.supp(1), sl.supp(2), sl.supp(3)), true);
            let b = |x: Freq| sl.c(2, x) * sl.c(4, x) * sl.c(5, x);
            triple_sum(&mut out, C::new(-3.0, 0.0), &c1, &b, &c3, (sl.supp(1), sl.supp(2), sl.supp(3)), true);
        }
        4 => {
            for &(n1, _) in sl.supp(1) {
                let x = sl.c(1, n1) * sl.c(3, n1) * sl.c(5, n1) * sl.c(4, n1);
                if x == ZERO {
                    continue;
                }
                for &(n2, y) in sl.supp(2) {
                    accumulate(&mut out, 2 * n1 - n2, 2.0 * x * y);
                }
            }
        }
        5 => {
            let mut t123 = FourierField::zeros(n_out);
            let (c1, c2, c3) = (|x: Freq| sl.c(1, x), |x: Freq| sl.c(2, x), |x: Freq| sl.c(3, x));
            triple_sum(&mut t123, C::new(1.0, 0.0), &c1, &c2, &c3, (sl.supp(1), sl.supp(2), sl.supp(3)), false);
            // n = n₂ − n₁ + n₄
            let mut t214 = FourierField::zeros(n_out);
            let c4 = |x: Freq| sl.c(4, x);
            triple_sum(&mut t214, C::new(1.0, 0.0), &c2, &c1, &c4, (sl.supp(2), sl.supp(1), sl.supp(4)), false);
            for i in 0..out.len() {
                let n = out.freq_at(i);
                let v = -6.0 * sl.c(5, n) * sl.c(4, n) * t123.get(n) - 3.0 * sl.c(3, n) * sl.c(5, n) * t214.get(n);
                out.coefficients_mut()[i] = v;
            }
        }
        6 => {
            let pair = |a: usize, b: usize| {
                let mut s = FourierField::zeros(2 * sl.n_in());
                for &(p, x) in sl.supp(a) {
                    for &(q, y) in sl.supp(b) {
                        accumulate(&mut s, p + q, x * y);
                    }
                }
                s
            };
            let s24 = pair(2, 4);
            let s13 = pair(1, 3);
            for i in 0..out.len() {
                let n = out.freq_at(i);
                let v = sl.c(1, n) * sl.c(3, n) * sl.c(5, n) * s24.get(2 * n)
                    + 3.0 * sl.c(2, n) * sl.c(4, n) * sl.c(5, n) * s13.get(2 * n);
                out.coefficients_mut()[i] = v;
            }
        }
        7 => {
            let m = sl.pair_sum(4, 5);
            for i in 0..out.len() {
                let n = out.freq_at(i);
                let p123 = sl.c(1, n) * sl.c(2, n) * sl.c(3, n);
                out.coefficients_mut()[i] = -11.0 * p123 * sl.c(4, n) * sl.c(5, n) + 12.0 * m * p123;
            }
        }
        _ => unreachable!("J index out of range"),
    }
    out
}

fn sigma_edges() -> Vec<(Node, Node)> {
    use Node::*;
    let mut e = Vec::new();
    for odd in [0, 2, 4] {
        for even in [1, 3] {
            e.push((Slot(odd), Slot(even)));
        }
        e.push((Slot(odd), Out));
    }
    e
}

/// J₁(n) = Σ_{Σ(n)} c₁c₂c₃c₄c₅.
fn j1(sl: &Slots, strategy: SumStrategy) -> FourierField {
    let tuples: f64 = sl.s.iter().map(|s| s.len() as f64).product();
    let enumerate = match strategy {
        SumStrategy::Enumerate => true,
        SumStrategy::InclusionExclusion => false,
        SumStrategy::Auto => tuples <= J1_ENUMERATION_BUDGET,
    };
    if enumerate {
        j1_enumerated(sl)
    } else {
        let signs = [1, -1, 1, -1, 1];
        let slots: Vec<CSlot> = (0..5).map(|i| CSlot { field: &sl.f[i], sign: signs[i] }).collect();
        constrained_sum(&slots, &sigma_edges(), 5 * sl.n_in())
    }
}

fn j1_enumerated(sl: &Slots) -> FourierField {
    let mut out = FourierField::zeros(5 * sl.n_in());
    for &(n1, x1) in sl.supp(1) {
        for &(n2, x2) in sl.supp(2) {
            if n1 == n2 {
                continue;
            }
            let p12 = x1 * x2;
            for &(n3, x3) in sl.supp(3) {
                if n3 == n2 {
                    continue;
                }
                let p123 = p12 * x3;
                let s123 = n1 - n2 + n3;
                for &(n4, x4) in sl.supp(4) {
                    if n4 == n1 || n4 == n3 {
                        continue;
                    }
                    let p1234 = p123 * x4;
                    let s1234 = s123 - n4;
                    for &(n5, x5) in sl.supp(5) {
                        if n5 == n2 || n5 == n4 {
                            continue;
                        }
                        let n = s1234 + n5;
                        if n1 == n || n3 == n || n5 == n {
                            continue;
                        }
                        accumulate(&mut out, n, p1234 * x5);
                    }
                }
            }
        }
    }
    out
}

/// A node of the constraint graph: a summation slot or the output frequency.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Node {
    Slot(usize),
    Out,
}

/// Slot of a constrained sum: coefficients (already conjugated if needed)
/// and the sign with which its index enters n = Σ σ_i n_i.
pub(crate) struct CSlot<'a> {
    pub field: &'a FourierField,
    pub sign: i32,
}

/// Union–find labels of the partition induced by the edges in `mask`;
/// the output node is the last entry.
pub(crate) fn partition_of(nodes: usize, edges: &[(usize, usize)], mask: u64) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..nodes).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    for (e, &(a, b)) in edges.iter().enumerate() {
        if mask >> e & 1 == 1 {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    (0..nodes).map(|x| find(&mut parent, x)).collect()
}

/// Möbius weights: Π_{e}(1 − [e]) expanded and grouped by the partition each
/// subset of equalities induces.
pub(crate) fn inclusion_exclusion(nodes: usize, edges: &[(usize, usize)]) -> BTreeMap<Vec<usize>, i64> {
    assert!(edges.len() < 40, "too many constraint edges");
    let mut acc: BTreeMap<Vec<usize>, i64> = BTreeMap::new();
    for mask in 0u64..(1u64 << edges.len()) {
        let sign = if mask.count_ones() % 2 == 0 { 1 } else { -1 };
        *acc.entry(partition_of(nodes, edges, mask)).or_default() += sign;
    }
    acc.retain(|_, w| *w != 0);
    acc
}

/// out(n) = Σ_{Σσ_i n_i = n, constraints} Π c_i(n_i) via inclusion–exclusion;
/// each collapsed pattern is a direct convolution of merged slots.
pub(crate) fn constrained_sum(slots: &[CSlot], edges: &[(Node, Node)], n_out: usize) -> FourierField {
    let r = slots.len();
    let idx = |x: Node| match x {
        Node::Slot(i) => i,
        Node::Out => r,
    };
    let edges: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (idx(a), idx(b))).collect();
    let mut out = FourierField::zeros(n_out);
    for (labels, w) in inclusion_exclusion(r + 1, &edges) {
        let out_label = labels[r];
        let mut scalar = C::new(w as f64, 0.0);
        let mut conv: Option<FourierField> = None;
        let mut q_out = 0;
        let mut out_slots = Vec::new();
        let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..r {
            if labels[i] == out_label {
                q_out += slots[i].sign;
                out_slots.push(i);
            } else {
                classes.entry(labels[i]).or_default().push(i);
            }
        }
        for members in classes.values() {
            let q: i32 = members.iter().map(|&i| slots[i].sign).sum();
            let nm = members.iter().map(|&i| slots[i].field.n_max()).min().unwrap();
            let merged = FourierField::from_fn(nm, |k| members.iter().map(|&i| slots[i].field.get(k)).product());
            if q == 0 {
                scalar *= merged.coefficients().iter().sum::<C>();
            } else {
                let mut dil = FourierField::zeros(nm * q.unsigned_abs() as usize);
                for (k, v) in merged.support() {
                    dil.set(q * k, v);
                }
                conv = Some(match conv {
                    None => dil,
                    Some(c) => convolve(&c, &dil),
                });
            }
        }
        if scalar == ZERO {
            continue;
        }
        for i in 0..out.len() {
            let n = out.freq_at(i);
            let pre: C = out_slots.iter().map(|&s| slots[s].field.get(n)).product();
            if pre == ZERO {
                continue;
            }
            let x = (1 - q_out) * n;
            let c = match &conv {
                None => {
                    if x == Freq::ZERO {
                        C::new(1.0, 0.0)
                    } else {
                        ZERO
                    }
                }
                Some(f) => f.get(x),
            };
            out.coefficients_mut()[i] += scalar * pre * c;
        }
    }
    out
}

fn decompose_slots(sl: &Slots, strategy: SumStrategy) -> Vec<FourierField> {
    (1..=7).map(|k| j_term(k, sl, strategy)).collect()
}

/// J₁ … J₇, the resonant part, the mass and ∫|u|⁴.
pub fn decompose_j(u: &FourierField) -> JDecomposition {
    decompose_j_with(u, SumStrategy::Auto)
}

pub fn decompose_j_with(u: &FourierField, strategy: SumStrategy) -> JDecomposition {
    let sl = Slots::new([u; 5]);
    let j = decompose_slots(&sl, strategy);
    let quartic = quartic_integral(u);
    let n_out = 5 * u.n_max();
    let resonant = FourierField::from_fn(n_out, |n| 3.0 * quartic * u.get(n));
    JDecomposition { j, resonant, mass: mass(u), quartic }
}

/// ‖Σ J_k + resonant − F(|u|⁴u)‖ / ‖F(|u|⁴u)‖, F by the FFT route.
pub fn identity_error(u: &FourierField, d: &JDecomposition) -> f64 {
    let f = quintic_fourier_fft(u);
    let scale = f.l2_norm();
    let diff = d.total().sub(&f).l2_norm();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Each J_k(w + θ) split by which slots carry θ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSplit {
    /// parts[k][p]: J_{k+1} with slot i random exactly when bit i of p is set.
    pub parts: Vec<Vec<FourierField>>,
}

impl LinearSplit {
    /// "D"/"R" label of a pattern, slot 1 first.
    pub fn pattern_label(p: usize) -> String {
        (0..5).map(|i| if p >> i & 1 == 1 { 'R' } else { 'D' }).collect()
    }

    /// Σ_p parts[k][p].
    pub fn recombine(&self, k: usize) -> FourierField {
        let mut acc = FourierField::zeros(self.parts[k][0].n_max());
        for f in &self.parts[k] {
            acc = acc.add(f);
        }
        acc
    }
}

/// The 2⁵ randomness patterns of every J_k evaluated at w + θ.
pub fn decompose_about_linear(w: &FourierField, theta: &FourierField) -> Result<LinearSplit> {
    if w.n_max() != theta.n_max() {
        return Err(Error::GridMismatch("w and theta must share N_max".into()));
    }
    let parts = (1..=7)
        .map(|k| {
            (0..32)
                .map(|p| {
                    let args: [&FourierField; 5] = std::array::from_fn(|i| if p >> i & 1 == 1 { theta } else { w });
                    j_term(k, &Slots::new(args), SumStrategy::Auto)
                })
                .collect()
        })
        .collect();
    Ok(LinearSplit { parts })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(n_max: usize, seed: u64) -> FourierField {
        FourierField::from_fn(n_max, |n| {
            crate::random_data::gaussian(seed, n) * (1.0 / (1.0 + n.norm2() as f64))
        })
    }

    #[test]
    fn plane_wave_quintic() {
        let a = C::new(0.7, -0.3);
        let n0 = Freq::new(1, 0, -1);
        let u = FourierField::plane_wave(1, n0, a);
        let want = a * a.norm_sqr() * a.norm_sqr();
        for f in [quintic_fourier_bruteforce(&u).unwrap(), quintic_fourier_fft(&u)] {
            assert!((f.get(n0) - want).norm() < 1e-14);
            assert!(f.sub(&FourierField::plane_wave(5, n0, want)).max_abs() < 1e-14);
        }
    }

    #[test]
    fn brute_force_budget() {
        assert!(quintic_fourier_bruteforce(&FourierField::zeros(3)).is_err());
        assert_eq!(quintic_fourier_bruteforce(&FourierField::zeros(2)).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn fft_matches_brute_force() {
        for seed in 0..3 {
            let u = field(2, seed);
            let b = quintic_fourier_bruteforce(&u).unwrap();
            let f = quintic_fourier_fft(&u);
            assert!(b.sub(&f).l2_norm() <= 1e-12 * b.l2_norm());
        }
    }

    #[test]
    fn integrals() {
        let e0 = FourierField::plane_wave(1, Freq::ZERO, C::new(1.0, 0.0));
        assert_eq!(mass(&e0), 1.0);
        assert!((quartic_integral(&e0) - 1.0).abs() < 1e-14);
        assert!((beta(&e0) - 3.0).abs() < 1e-13);
        let a = C::new(0.5, 0.5);
        let pw = FourierField::plane_wave(2, Freq::new(2, -1, 0), a);
        assert!((quartic_integral(&pw) - a.norm_sqr().powi(2)).abs() < 1e-15);
        let mut two = FourierField::zeros(1);
        two.set(Freq::new(1, 0, 0), C::new(1.0, 0.0));
        two.set(Freq::new(0, 1, 0), C::new(0.0, 1.0));
        assert_eq!(mass(&two), 2.0);
        // |e1 + i e2|⁴ averages to 2·2² − (1 + 1) = 6
        assert!((quartic_integral(&two) - 6.0).abs() < 1e-13);
    }

    #[test]
    fn plane_wave_parts() {
        let a = C::new(0.8, 0.6);
        let n0 = Freq::new(0, 1, 0);
        let u = FourierField::plane_wave(1, n0, a);
        let d = decompose_j(&u);
        let a5 = a * a.norm_sqr().powi(2);
        let at = |k: usize| d.j[k - 1].get(n0);
        assert!(at(1).norm() < 1e-14 && at(2).norm() < 1e-14 && at(3).norm() < 1e-14);
        assert!((at(4) - 2.0 * a5).norm() < 1e-14);
        assert!((at(5) + 9.0 * a5).norm() < 1e-14);
        assert!((at(6) - 4.0 * a5).norm() < 1e-14);
        assert!((at(7) - a5).norm() < 1e-14);
        assert!((d.sum_j().get(n0) + 2.0 * a5).norm() < 1e-14);
        let g = gauged_nonlinearity(&u, 1.0);
        assert!(d.sum_j().sub(&g).max_abs() < 1e-13);
    }

    #[test]
    fn zero_field_parts_vanish() {
        let d = decompose_j(&FourierField::zeros(1));
        assert!(d.j.iter().all(|f| f.max_abs() == 0.0));
        assert_eq!(d.resonant.max_abs(), 0.0);
    }

    #[test]
    fn identity_small() {
        let u = field(1, 11);
        let d = decompose_j(&u);
        assert!(identity_error(&u, &d) < 1e-12);
    }

    #[test]
    fn j1_strategies_agree() {
        let u = field(1, 4);
        let sl = Slots::new([&u; 5]);
        let a = j1(&sl, SumStrategy::Enumerate);
        let b = j1(&sl, SumStrategy::InclusionExclusion);
        assert!(a.sub(&b).l2_norm() <= 1e-12 * a.l2_norm());
    }

    #[test]
    fn inclusion_exclusion_single_edge() {
        // Π(1 − [a=b]) over one edge: the discrete partition with +1, the merged one with −1
        let w = inclusion_exclusion(3, &[(0, 1)]);
        assert_eq!(w.get(&vec![0, 1, 2]), Some(&1));
        assert_eq!(w.get(&vec![0, 0, 2]), Some(&-1));
        assert_eq!(w.len(), 2);
    }

    #[test]
    fn split_recombines() {
        let w = field(1, 1);
        let th = field(1, 2).scale(C::new(0.3, 0.0));
        let split = decompose_about_linear(&w, &th).unwrap();
        let whole = decompose_j(&w.add(&th));
        for k in 0..7 {
            let r = split.recombine(k);
            assert!(r.sub(&whole.j[k]).l2_norm() <= 1e-12 * whole.j[k].l2_norm().max(1e-300));
        }
        assert_eq!(LinearSplit::pattern_label(0b00101), "RDRDD");
    }
}
