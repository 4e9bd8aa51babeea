//! Integer frequency lattice, hyperplane constraint sets and exhaustive
//! lattice-point counting.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A point of the frequency lattice ℤ³.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub struct Freq(pub [i32; 3]);

impl Freq {
    pub const ZERO: Freq = Freq([0, 0, 0]);

    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        Freq([x, y, z])
    }

    /// |n|², the dispersion symbol.
    pub fn norm2(self) -> i64 {
        self.0.iter().map(|&c| (c as i64) * (c as i64)).sum()
    }

    pub fn norm(self) -> f64 {
        (self.norm2() as f64).sqrt()
    }

    /// ⟨n⟩ = (1 + |n|²)^{1/2}.
    pub fn japanese(self) -> f64 {
        (1.0 + self.norm2() as f64).sqrt()
    }

    pub fn dot(self, other: Freq) -> i64 {
        (0..3).map(|i| self.0[i] as i64 * other.0[i] as i64).sum()
    }

    /// Sup norm max |n_i|.
    pub fn max_abs(self) -> i32 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }
}

impl Add for Freq {
    type Output = Freq;
    fn add(self, o: Freq) -> Freq {
        Freq([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Freq {
    type Output = Freq;
    fn sub(self, o: Freq) -> Freq {
        Freq([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for Freq {
    type Output = Freq;
    fn neg(self) -> Freq {
        Freq([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<Freq> for i32 {
    type Output = Freq;
    fn mul(self, n: Freq) -> Freq {
        Freq([self * n.0[0], self * n.0[1], self * n.0[2]])
    }
}

/// All lattice points of the cube [−n_max, n_max]³ in lexicographic order.
pub fn cube_points(n_max: usize) -> Vec<Freq> {
    let n = n_max as i32;
    let mut out = Vec::with_capacity((2 * n_max + 1).pow(3));
    for x in -n..=n {
        for y in -n..=n {
            for z in -n..=n {
                out.push(Freq([x, y, z]));
            }
        }
    }
    out
}

/// All n with |n| ≤ r, lexicographic order.
pub fn enumerate_ball(r: f64) -> Vec<Freq> {
    if !(r >= 0.0) {
        return Vec::new();
    }
    let r2 = r * r;
    let b = r.floor() as i32;
    let mut out = Vec::new();
    for x in -b..=b {
        for y in -b..=b {
            for z in -b..=b {
                let n = Freq([x, y, z]);
                if (n.norm2() as f64) <= r2 + 1e-9 {
                    out.push(n);
                }
            }
        }
    }
    out
}

fn isqrt(v: i64) -> i64 {
    if v < 0 {
        return -1;
    }
    let mut s = (v as f64).sqrt() as i64;
    while s * s > v {
        s -= 1;
    }
    while (s + 1) * (s + 1) <= v {
        s += 1;
    }
    s
}

/// Lattice points on the sphere |n|² = r2, lexicographic order.
pub fn sphere_points(r2: u64) -> Vec<Freq> {
    let r2 = r2 as i64;
    let b = isqrt(r2) as i32;
    let mut out = Vec::new();
    for x in -b..=b {
        let rx = r2 - (x as i64) * (x as i64);
        let by = isqrt(rx) as i32;
        for y in -by..=by {
            let rz = rx - (y as i64) * (y as i64);
            let z = isqrt(rz);
            if z * z == rz {
                if z == 0 {
                    out.push(Freq([x, y, 0]));
                } else {
                    out.push(Freq([x, y, -(z as i32)]));
                    out.push(Freq([x, y, z as i32]));
                }
            }
        }
    }
    out
}

/// #{n ∈ ℤ³ : |n|² = r2}.
pub fn sphere_count(r2: u64) -> u64 {
    sphere_points(r2).len() as u64
}

fn within(n: Freq, center: Freq, r: f64) -> bool {
    ((n - center).norm2() as f64) <= r * r + 1e-9
}

/// #(ℤ³ ∩ S_R ∩ B_r(center)) with R² = r2.
pub fn sphere_ball_count(r2: u64, r: f64, center: Freq) -> u64 {
    sphere_points(r2).into_iter().filter(|&n| within(n, center, r)).count() as u64
}

/// #{n : normal·n = offset, |n − center| ≤ r}.
pub fn plane_ball_count(normal: Freq, offset: i64, r: f64, center: Freq) -> Result<u64> {
    if normal == Freq::ZERO {
        return Err(invalid("plane normal must be nonzero"));
    }
    if !(r >= 0.0) {
        return Ok(0);
    }
    let b = r.floor() as i32;
    let mut count = 0;
    for x in -b..=b {
        for y in -b..=b {
            for z in -b..=b {
                let n = center + Freq([x, y, z]);
                if n.dot(normal) == offset && within(n, center, r) {
                    count += 1;
                }
            }
        }
    }
    Ok(count)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountingFamily {
    Sphere,
    SphereBall,
    PlaneBall,
}

impl std::str::FromStr for CountingFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(Self::Sphere),
            "sphere_ball" | "sphere-ball" => Ok(Self::SphereBall),
            "plane_ball" | "plane-ball" => Ok(Self::PlaneBall),
            other => Err(invalid(format!("unknown counting family `{other}`"))),
        }
    }
}

/// Parameter range of a certification sweep. Which fields matter depends on
/// the family: spheres use `r2_min..=r2_max`, sphere∩ball adds `radii`,
/// plane∩ball uses `radii`, `normals` and `offsets`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountingRange {
    pub r2_min: u64,
    pub r2_max: u64,
    #[serde(default)]
    pub radii: Vec<f64>,
    #[serde(default)]
    pub normals: Vec<Freq>,
    #[serde(default)]
    pub offsets: Vec<i64>,
}

impl CountingRange {
    pub fn sphere(r2_max: u64) -> Self {
        CountingRange { r2_min: 1, r2_max, radii: vec![], normals: vec![], offsets: vec![] }
    }

    pub fn sphere_ball(r2_max: u64, radii: Vec<f64>) -> Self {
        CountingRange { r2_min: 1, r2_max, radii, normals: vec![], offsets: vec![] }
    }

    pub fn plane_ball(radii: Vec<f64>) -> Self {
        CountingRange {
            r2_min: 0,
            r2_max: 0,
            radii,
            normals: vec![
                Freq::new(0, 0, 1),
                Freq::new(1, 1, 0),
                Freq::new(1, 1, 1),
                Freq::new(1, 2, 3),
                Freq::new(2, -1, 5),
            ],
            offsets: vec![0, 1, 2, 3],
        }
    }
}

/// Exponent ε-slackened in the sphere bound R^{1+0.35}.
pub const SPHERE_EXPONENT: f64 = 1.35;

/// Outcome of a counting sweep. The constant is fitted on the first half of
/// the sweep (in parameter order) and `holds` records whether it still bounds
/// the second half.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub family: CountingFamily,
    pub range: CountingRange,
    pub bound_exponent: f64,
    pub fitted_constant: f64,
    pub max_ratio: f64,
    pub worst_case_params: Option<BTreeMap<String, f64>>,
    pub samples: usize,
    pub holdout_max_ratio: f64,
    pub holds: bool,
}

struct Sample {
    params: BTreeMap<String, f64>,
    ratio: f64,
}

fn sample(params: &[(&str, f64)], count: u64, bound: f64) -> Sample {
    Sample {
        params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        ratio: count as f64 / bound,
    }
}

/// Sweep the family over the range and fit the constant in count ≤ C·B.
pub fn certify_counting_bound(family: CountingFamily, range: &CountingRange) -> Result<CertReport> {
    let samples = match family {
        CountingFamily::Sphere => sweep_sphere(range),
        CountingFamily::SphereBall => sweep_sphere_ball(range),
        CountingFamily::PlaneBall => sweep_plane_ball(range)?,
    };
    let bound_exponent = match family {
        CountingFamily::Sphere | CountingFamily::SphereBall => SPHERE_EXPONENT,
        CountingFamily::PlaneBall => 2.0,
    };
    let half = samples.len().div_ceil(2);
    let max_of = |s: &[Sample]| s.iter().map(|x| x.ratio).fold(0.0_f64, f64::max);
    let fitted_constant = max_of(&samples[..half]);
    let holdout_max_ratio = max_of(&samples[half..]);
    let worst = samples
        .iter()
        .fold(None::<&Sample>, |acc, s| match acc {
            Some(a) if a.ratio >= s.ratio => Some(a),
            _ => Some(s),
        })
        .map(|s| s.params.clone());
    Ok(CertReport {
        family,
        range: range.clone(),
        bound_exponent,
        fitted_constant,
        max_ratio: max_of(&samples),
        worst_case_params: worst,
        samples: samples.len(),
        holdout_max_ratio,
        holds: holdout_max_ratio <= fitted_constant,
    })
}

/// Sphere populations for every |n|² ≤ r2_max in one pass over the ball.
fn sphere_histogram(r2_max: u64) -> Vec<u64> {
    let mut hist = vec![0u64; r2_max as usize + 1];
    let b = isqrt(r2_max as i64) as i32;
    for x in -b..=b {
        for y in -b..=b {
            let rxy = (x as i64).pow(2) + (y as i64).pow(2);
            if rxy > r2_max as i64 {
                continue;
            }
            for z in -b..=b {
                let m = rxy + (z as i64).pow(2);
                if m <= r2_max as i64 {
                    hist[m as usize] += 1;
                }
            }
        }
    }
    hist
}

fn sweep_sphere(range: &CountingRange) -> Vec<Sample> {
    if range.r2_max < range.r2_min.max(1) {
        return Vec::new();
    }
    let hist = sphere_histogram(range.r2_max);
    (range.r2_min.max(1)..=range.r2_max)
        .map(|r2| {
            let big_r = (r2 as f64).sqrt();
            sample(&[("r2", r2 as f64)], hist[r2 as usize], big_r.powf(SPHERE_EXPONENT))
        })
        .collect()
}

fn sweep_sphere_ball(range: &CountingRange) -> Vec<Sample> {
    let mut out = Vec::new();
    if range.radii.is_empty() {
        return out;
    }
    for r2 in range.r2_min.max(1)..=range.r2_max {
        let pts = sphere_points(r2);
        if pts.is_empty() {
            continue;
        }
        let big_r = (r2 as f64).sqrt();
        // Balls centred on the sphere see the largest caps: take the first
        // point and the one closest to the diagonal direction.
        let diag = pts.iter().copied().max_by_key(|n| (n.0[0] + n.0[1] + n.0[2], *n)).unwrap_or(pts[0]);
        let centers = [pts[0], diag];
        for &r in &range.radii {
            for c in centers {
                let count = pts.iter().filter(|&&n| within(n, c, r)).count() as u64;
                let bound = big_r.powf(SPHERE_EXPONENT).min(r * r);
                out.push(sample(
                    &[("r2", r2 as f64), ("r", r), ("cx", c.0[0] as f64), ("cy", c.0[1] as f64), ("cz", c.0[2] as f64)],
                    count,
                    bound,
                ));
            }
        }
    }
    out
}

fn sweep_plane_ball(range: &CountingRange) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for &r in &range.radii {
        for &normal in &range.normals {
            for &offset in &range.offsets {
                let count = plane_ball_count(normal, offset, r, Freq::ZERO)?;
                out.push(sample(
                    &[
                        ("r", r),
                        ("nx", normal.0[0] as f64),
                        ("ny", normal.0[1] as f64),
                        ("nz", normal.0[2] as f64),
                        ("offset", offset as f64),
                    ],
                    count,
                    r * r,
                ));
            }
        }
    }
    Ok(out)
}

/// The hyperplane sets used by the Fourier decomposition of the quintic term.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// n = n_{p1} − n_{p2} + n_{p3} − … over the listed slot labels.
    Gamma(Vec<usize>),
    /// Γ(n)_{[1..5]} with n₁, n₃, n₅ ≠ n.
    Lambda,
    /// Λ(n) with n₁, n₃, n₅ ∉ {n₂, n₄}.
    Sigma,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub kind: ConstraintKind,
    pub n: Freq,
    pub n_max: usize,
}

/// Default enumeration budget in candidate tuples.
pub const TUPLE_BUDGET: f64 = 1e9;

impl ConstraintSet {
    fn arity(&self) -> usize {
        match &self.kind {
            ConstraintKind::Gamma(p) => p.len(),
            _ => 5,
        }
    }

    /// Number of candidate tuples the enumeration walks through.
    pub fn candidate_count(&self) -> f64 {
        let side = (2 * self.n_max + 1) as f64;
        side.powi(3 * (self.arity() as i32 - 1))
    }
}

/// Every tuple of the set, in lexicographic order of its leading entries.
/// Tuples are indexed by position, so entry i carries the slot label
/// `pattern[i]` for Γ and label i+1 for Λ and Σ.
pub fn enumerate_constraint(set: &ConstraintSet) -> Result<Vec<Vec<Freq>>> {
    enumerate_constraint_with_budget(set, TUPLE_BUDGET)
}

pub fn enumerate_constraint_with_budget(set: &ConstraintSet, budget: f64) -> Result<Vec<Vec<Freq>>> {
    let r = set.arity();
    if r == 0 {
        return Err(invalid("empty index pattern"));
    }
    if let ConstraintKind::Gamma(p) = &set.kind {
        let mut seen = p.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != p.len() {
            return Err(invalid("index pattern repeats a slot"));
        }
    }
    let needed = set.candidate_count();
    if needed > budget {
        return Err(Error::BudgetExceeded { what: "constraint enumeration".into(), needed, budget });
    }
    let cube = cube_points(set.n_max);
    let nm = set.n_max as i32;
    let mut out = Vec::new();
    let mut idx = vec![0usize; r - 1];
    let sign = |i: usize| if i % 2 == 0 { 1 } else { -1 };
    loop {
        // last entry is determined by the linear constraint
        let mut partial = Freq::ZERO;
        for (i, &k) in idx.iter().enumerate() {
            partial = partial + sign(i) * cube[k];
        }
        let last = sign(r - 1) * (set.n - partial);
        if last.max_abs() <= nm {
            let mut tuple: Vec<Freq> = idx.iter().map(|&k| cube[k]).collect();
            tuple.push(last);
            if admissible(&set.kind, set.n, &tuple) {
                out.push(tuple);
            }
        }
        // odometer
        let mut pos = r - 1;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < cube.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

fn admissible(kind: &ConstraintKind, n: Freq, t: &[Freq]) -> bool {
    match kind {
        ConstraintKind::Gamma(_) => true,
        ConstraintKind::Lambda => t[0] != n && t[2] != n && t[4] != n,
        ConstraintKind::Sigma => {
            t[0] != n
                && t[2] != n
                && t[4] != n
                && [t[0], t[2], t[4]].iter().all(|o| *o != t[1] && *o != t[3])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_sizes() {
        assert_eq!(enumerate_ball(0.0), vec![Freq::ZERO]);
        assert_eq!(enumerate_ball(1.0).len(), 7);
        assert_eq!(enumerate_ball(1.5).len(), 19);
        let b = enumerate_ball(2.0);
        let mut sorted = b.clone();
        sorted.sort();
        assert_eq!(b, sorted);
    }

    #[test]
    fn sphere_examples() {
        assert_eq!(sphere_count(0), 1);
        assert_eq!(sphere_count(1), 6);
        assert_eq!(sphere_count(25), 30);
        assert_eq!(sphere_count(7), 0);
    }

    #[test]
    fn sphere_ball_examples() {
        assert_eq!(sphere_ball_count(25, 100.0, Freq::ZERO), 30);
        assert_eq!(sphere_ball_count(25, 0.5, Freq::ZERO), 0);
        // |n|²=2 points within 1.5 of (1,1,0): (1,1,0), (1,0,±1), (0,1,±1) and (1,0,0)-type are not on the sphere
        assert_eq!(sphere_ball_count(2, 1.5, Freq::new(1, 1, 0)), 5);
    }

    #[test]
    fn plane_ball_examples() {
        assert_eq!(plane_ball_count(Freq::new(0, 0, 1), 0, 1.0, Freq::ZERO).unwrap(), 5);
        assert_eq!(plane_ball_count(Freq::new(0, 0, 1), 7, 1.0, Freq::ZERO).unwrap(), 0);
        // x+y+z=0, |n|≤2: origin, 6 of type (1,-1,0), 6 of type (1,1,-2) have |n|²=6>4
        assert_eq!(plane_ball_count(Freq::new(1, 1, 1), 0, 2.0, Freq::ZERO).unwrap(), 7);
        assert!(plane_ball_count(Freq::ZERO, 0, 1.0, Freq::ZERO).is_err());
    }

    #[test]
    fn histogram_agrees_with_direct_count() {
        let h = sphere_histogram(300);
        for r2 in 0..=300u64 {
            assert_eq!(h[r2 as usize], sphere_count(r2), "r2={r2}");
        }
    }

    #[test]
    fn empty_range_gives_empty_report() {
        let rep = certify_counting_bound(CountingFamily::Sphere, &CountingRange::sphere(0)).unwrap();
        assert_eq!(rep.samples, 0);
        assert_eq!(rep.max_ratio, 0.0);
        assert!(rep.worst_case_params.is_none());
    }

    #[test]
    fn gamma_small_pattern() {
        let set = ConstraintSet { kind: ConstraintKind::Gamma(vec![3, 4, 5]), n: Freq::ZERO, n_max: 1 };
        let tuples = enumerate_constraint(&set).unwrap();
        let mut brute = 0;
        let cube = cube_points(1);
        for a in &cube {
            for b in &cube {
                for c in &cube {
                    if *a - *b + *c == Freq::ZERO {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(tuples.len(), brute);
        assert!(tuples.iter().all(|t| t[0] - t[1] + t[2] == Freq::ZERO));
    }

    #[test]
    fn budget_guard() {
        let set = ConstraintSet { kind: ConstraintKind::Sigma, n: Freq::ZERO, n_max: 3 };
        assert!(matches!(enumerate_constraint(&set), Err(Error::BudgetExceeded { .. })));
    }
}
