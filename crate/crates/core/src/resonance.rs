//! Exact enumeration of the lattice resonance sets
//!
//! ```text
//! S   = {(n₁,n₂,n₃) : |n_j| ∼ N_j, n₂ ≠ n₁,n₃, μ = 2(n₁−n₂)·(n₃−n₂)}
//! R_n = S ∩ {n₁ − n₂ + n₃ = n}
//! ```
//!
//! and of the five-index quintic analogue in one dimension.
//!
//! Nothing here touches floating point in a constraint. With one index fixed
//! the level set `a·b = μ/2` (`a = n₁ − n₂`, `b = n₃ − n₂`) is a lattice line,
//! so the enumeration walks lines instead of boxes; with `n` and `n₂` fixed the
//! remaining freedom is a lattice circle `|2a − c|² = |c|² − 2μ`, `c = n − n₂`.

use std::cell::Cell;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{rate_fit, RateFit};
use crate::spectral::{in_dyadic_shell, mode_norm_sq, Mode};

/// Upper limit on the number of candidate tuples one query may visit.
pub const CANDIDATE_GUARD: u64 = 1_000_000_000;

/// Slack added to the bound exponent when judging a fit.
pub const FIT_SLACK: f64 = 0.3;

/// Index range for one `n_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShellRange {
    /// `N/2 < |n| ≤ N`, `N` dyadic.
    Dyadic(u64),
    /// `|n| ≤ R`, origin included.
    Ball(u64),
}

impl ShellRange {
    pub fn contains(self, n: Mode) -> bool {
        let r2 = mode_norm_sq(n);
        match self {
            ShellRange::Dyadic(m) => in_dyadic_shell(r2, m),
            ShellRange::Ball(r) => r2 <= (r * r) as i64,
        }
    }

    pub fn radius(self) -> u64 {
        match self {
            ShellRange::Dyadic(m) | ShellRange::Ball(m) => m,
        }
    }

    /// The `N_j` entering bound formulas.
    pub fn scale(self) -> f64 {
        self.radius().max(1) as f64
    }

    pub fn points(self, dim: usize) -> Vec<Mode> {
        let r = self.radius() as i64;
        let mut out = Vec::new();
        for a in -r..=r {
            if dim == 1 {
                if self.contains([a, 0]) {
                    out.push([a, 0]);
                }
                continue;
            }
            for b in -r..=r {
                if self.contains([a, b]) {
                    out.push([a, b]);
                }
            }
        }
        out
    }

    /// Points with `0 ≤ n[1] ≤ n[0]` (d = 2) or `n ≥ 0` (d = 1): one per orbit of
    /// the lattice symmetry group, which every count here is invariant under.
    fn canonical_points(self, dim: usize) -> Vec<Mode> {
        self.points(dim).into_iter().filter(|n| if dim == 1 { n[0] >= 0 } else { 0 <= n[1] && n[1] <= n[0] }).collect()
    }

    fn validate(self) -> Result<()> {
        match self {
            ShellRange::Dyadic(m) if m == 0 || !m.is_power_of_two() => {
                Err(Error::precondition(format!("shell {m} is not a dyadic integer ≥ 1")))
            }
            _ => Ok(()),
        }
    }
}

/// Index held fixed: `slot` is 1-based (`n₁ … n₅`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedIndex {
    pub slot: usize,
    pub value: Mode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResonanceQuery {
    pub dim: usize,
    pub mu: i64,
    pub shells: Vec<ShellRange>,
    pub exclusions: bool,
    pub fixed: Option<FixedIndex>,
    /// Range of the output index `n` in `R_n` counts; unrestricted when absent.
    #[serde(default)]
    pub output_shell: Option<ShellRange>,
}

impl ResonanceQuery {
    pub fn cubic(dim: usize, mu: i64, shells: [ShellRange; 3]) -> Self {
        Self { dim, mu, shells: shells.to_vec(), exclusions: true, fixed: None, output_shell: None }
    }

    pub fn quintic(mu: i64, shells: [ShellRange; 5]) -> Self {
        Self { dim: 1, mu, shells: shells.to_vec(), exclusions: true, fixed: None, output_shell: None }
    }

    pub fn with_fixed(mut self, slot: usize, value: Mode) -> Self {
        self.fixed = Some(FixedIndex { slot, value });
        self
    }

    pub fn with_output_shell(mut self, shell: ShellRange) -> Self {
        self.output_shell = Some(shell);
        self
    }

    fn admits_output(&self, n: Mode) -> bool {
        self.output_shell.is_none_or(|s| s.contains(n))
    }

    pub fn without_exclusions(mut self) -> Self {
        self.exclusions = false;
        self
    }

    pub fn validate(&self, arity: usize) -> Result<()> {
        if !matches!(self.dim, 1 | 2) {
            return Err(Error::precondition(format!("dimension {} not in {{1, 2}}", self.dim)));
        }
        if self.shells.len() != arity {
            return Err(Error::precondition(format!("expected {arity} shells, got {}", self.shells.len())));
        }
        if arity == 5 && self.dim != 1 {
            return Err(Error::precondition("the quintic count is defined in d = 1 only"));
        }
        for s in self.shells.iter().chain(&self.output_shell) {
            s.validate()?;
        }
        if let Some(f) = self.fixed {
            if f.slot == 0 || f.slot > arity {
                return Err(Error::precondition(format!("fixed slot {} outside 1..={arity}", f.slot)));
            }
            if self.dim == 1 && f.value[1] != 0 {
                return Err(Error::precondition("fixed index has a second component in d = 1"));
            }
        }
        Ok(())
    }

    fn slot_points(&self, slot: usize) -> Vec<Mode> {
        match self.fixed {
            Some(f) if f.slot == slot => {
                if self.shells[slot - 1].contains(f.value) {
                    vec![f.value]
                } else {
                    Vec::new()
                }
            }
            _ => self.shells[slot - 1].points(self.dim),
        }
    }

    fn admits(&self, slot: usize, n: Mode) -> bool {
        match self.fixed {
            Some(f) if f.slot == slot => f.value == n,
            _ => self.shells[slot - 1].contains(n),
        }
    }

    fn swapped_13(&self) -> Self {
        let mut q = self.clone();
        q.shells.swap(0, 2);
        if let Some(f) = q.fixed.as_mut() {
            f.slot = match f.slot {
                1 => 3,
                3 => 1,
                s => s,
            };
        }
        q
    }
}

/// Bound formula a count is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundForm {
    /// `#R_{n,n₂} ≲ N₁^{0+}`
    FixedN2,
    /// `#S_{n₃} ≲ N₁^{1+} N₂`
    FixedN3,
    /// `#R_n ≲ N₂ N₃^{0+}`
    RnCount,
    /// `#R_n(n₁,…,n₅) ≲ N₅N₄N₃N₂`
    Quintic,
    /// `#S` without a reference bound
    None,
}

impl BoundForm {
    pub fn value(self, shells: &[ShellRange]) -> f64 {
        let n = |j: usize| shells.get(j - 1).map_or(1.0, |s| s.scale());
        match self {
            BoundForm::FixedN2 | BoundForm::None => 1.0,
            BoundForm::FixedN3 => n(1) * n(2),
            BoundForm::RnCount => n(2),
            BoundForm::Quintic => n(2) * n(3) * n(4) * n(5),
        }
    }

    /// Power of `N₁` in the bound, ignoring the `ε` loss.
    pub fn n1_exponent(self) -> f64 {
        match self {
            BoundForm::FixedN3 => 1.0,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub query: ResonanceQuery,
    /// Output index `n` for `R_n` counts.
    pub target: Option<Mode>,
    pub count: u64,
    pub elapsed_micros: u64,
    pub bound_reference: BoundForm,
    pub bound_value: f64,
    pub empirical_constant: f64,
}

impl CountReport {
    fn new(query: ResonanceQuery, target: Option<Mode>, count: u64, start: Instant, bound: BoundForm) -> Self {
        let bound_value = bound.value(&query.shells);
        Self {
            target,
            count,
            elapsed_micros: start.elapsed().as_micros() as u64,
            bound_reference: bound,
            bound_value,
            empirical_constant: count as f64 / bound_value,
            query,
        }
    }

    pub const CSV_HEADER: &'static str =
        "d,mu,N1,N2,N3,N4,N5,fixed_index,count,bound_value,empirical_constant";

    pub fn csv_row(&self) -> String {
        let q = &self.query;
        let shell = |j: usize| q.shells.get(j).map_or(String::new(), |s| s.radius().to_string());
        let fixed = q.fixed.map_or(String::from("none"), |f| format!("n{}={}:{}", f.slot, f.value[0], f.value[1]));
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            q.dim,
            q.mu,
            shell(0),
            shell(1),
            shell(2),
            shell(3),
            shell(4),
            fixed,
            self.count,
            self.bound_value,
            self.empirical_constant
        )
    }
}

fn guard(work: u64) -> Result<()> {
    if work > CANDIDATE_GUARD {
        return Err(Error::Resource(format!("enumeration would visit {work} candidates, limit {CANDIDATE_GUARD}")));
    }
    Ok(())
}

/// Running count of visited candidates, checked against [`CANDIDATE_GUARD`].
#[derive(Debug, Default)]
struct Work {
    used: Cell<u64>,
}

impl Work {
    /// False once the budget is exhausted; callers then stop enumerating.
    fn charge(&self, n: u64) -> bool {
        let used = self.used.get().saturating_add(n);
        self.used.set(used);
        used <= CANDIDATE_GUARD
    }

    fn check(&self) -> Result<()> {
        guard(self.used.get())
    }
}

fn sub(a: Mode, b: Mode) -> Mode {
    [a[0] - b[0], a[1] - b[1]]
}

fn add(a: Mode, b: Mode) -> Mode {
    [a[0] + b[0], a[1] + b[1]]
}

fn dot(a: Mode, b: Mode) -> i64 {
    a[0] * b[0] + a[1] * b[1]
}

fn isqrt(m: i64) -> Option<i64> {
    if m < 0 {
        return None;
    }
    let mut r = (m as f64).sqrt() as i64;
    while r * r > m {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= m {
        r += 1;
    }
    Some(r)
}

fn extended_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a.abs(), a.signum(), 0)
    } else {
        let (g, x, y) = extended_gcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// Calls `visit(b)` for every lattice solution of `a·b = h` with `origin + b`
/// inside `shell`, including `b = 0`. `a` must be nonzero.
fn walk_line(work: &Work, dim: usize, a: Mode, h: i64, origin: Mode, shell: ShellRange, mut visit: impl FnMut(Mode)) {
    if !work.charge(1) {
        return;
    }
    if dim == 1 {
        if h % a[0] == 0 {
            let b = [h / a[0], 0];
            if shell.contains(add(origin, b)) {
                visit(b);
            }
        }
        return;
    }
    let (g, x, y) = extended_gcd(a[0], a[1]);
    if h % g != 0 {
        return;
    }
    let bp = [x * (h / g), y * (h / g)];
    let w = [-a[1] / g, a[0] / g];
    // |p + k w|² ≤ R² on a real interval of k, walked with one extra step either side
    let p = add(origin, bp);
    let (ww, pw, pp) = (dot(w, w) as f64, dot(p, w) as f64, dot(p, p) as f64);
    let r = shell.radius() as f64;
    let disc = pw * pw - ww * (pp - r * r);
    if disc < 0.0 {
        return;
    }
    let centre = -pw / ww;
    let half = disc.sqrt() / ww;
    let lo = (centre - half).floor() as i64 - 1;
    let hi = (centre + half).ceil() as i64 + 1;
    if !work.charge((hi - lo + 1) as u64) {
        return;
    }
    for k in lo..=hi {
        let b = [bp[0] + k * w[0], bp[1] + k * w[1]];
        if shell.contains(add(origin, b)) {
            debug_assert_eq!(dot(a, b), h);
            visit(b);
        }
    }
}

/// Calls `visit(n₁, n₃)` for every element of `S` with the given `n₂`.
fn walk_s_fixed_n2(q: &ResonanceQuery, work: &Work, n2: Mode, mut visit: impl FnMut(Mode, Mode)) {
    if q.mu % 2 != 0 {
        return;
    }
    let h = q.mu / 2;
    for n1 in q.slot_points(1) {
        let a = sub(n1, n2);
        if a == [0, 0] {
            if q.exclusions || h != 0 {
                continue;
            }
            let all = q.slot_points(3);
            if !work.charge(all.len() as u64) {
                return;
            }
            for n3 in all {
                visit(n1, n3);
            }
            continue;
        }
        walk_line(work, q.dim, a, h, n2, q.shells[2], |b| {
            let n3 = add(n2, b);
            if (q.exclusions && b == [0, 0]) || !q.admits(3, n3) {
                return;
            }
            visit(n1, n3);
        });
    }
}

fn count_s_fixed_n2(q: &ResonanceQuery, work: &Work, n2: Mode) -> u64 {
    let mut count = 0;
    walk_s_fixed_n2(q, work, n2, |_, _| count += 1);
    count
}

fn count_s_fixed_n3(q: &ResonanceQuery, work: &Work, n3: Mode) -> u64 {
    if q.mu % 2 != 0 {
        return 0;
    }
    let h = q.mu / 2;
    let mut count = 0;
    for n2 in q.slot_points(2) {
        let b = sub(n3, n2);
        if b == [0, 0] {
            if !q.exclusions && h == 0 {
                count += q.slot_points(1).len() as u64;
            }
            continue;
        }
        walk_line(work, q.dim, b, h, n2, q.shells[0], |a| {
            let n1 = add(n2, a);
            if (q.exclusions && a == [0, 0]) || !q.admits(1, n1) {
                return;
            }
            count += 1;
        });
    }
    count
}

fn count_s_inner(q: &ResonanceQuery, work: &Work) -> u64 {
    match q.fixed.map(|f| f.slot) {
        Some(1) => count_s_inner(&q.swapped_13(), work),
        Some(3) => count_s_fixed_n3(q, work, q.fixed.unwrap().value),
        _ => q.slot_points(2).into_iter().map(|n2| count_s_fixed_n2(q, work, n2)).sum(),
    }
}

/// Outer-loop iterations alone; a lower bound on the visited candidates.
fn count_s_outer(q: &ResonanceQuery) -> u64 {
    let size = |slot: usize| q.slot_points(slot).len() as u64;
    match q.fixed.map(|f| f.slot) {
        Some(1) | Some(3) => size(2),
        _ => size(2).saturating_mul(size(1)),
    }
}

/// `#S` (or `#S_{n_j}` when an index is fixed).
pub fn count_s(q: &ResonanceQuery) -> Result<CountReport> {
    q.validate(3)?;
    guard(count_s_outer(q))?;
    let start = Instant::now();
    let work = Work::default();
    let count = count_s_inner(q, &work);
    work.check()?;
    let bound = match q.fixed.map(|f| f.slot) {
        Some(3) | Some(1) => BoundForm::FixedN3,
        _ => BoundForm::None,
    };
    Ok(CountReport::new(q.clone(), None, count, start, bound))
}

/// `max_{n_j} #S_{n_j}` over all admissible values of the index in `slot`.
pub fn max_count_s(q: &ResonanceQuery, slot: usize) -> Result<CountReport> {
    let mut base = q.clone();
    base.fixed = None;
    base.validate(3)?;
    if !(1..=3).contains(&slot) {
        return Err(Error::precondition(format!("slot {slot} outside 1..=3")));
    }
    let candidates = base.shells[slot - 1].canonical_points(base.dim);
    let size = |j: usize| base.shells[j - 1].points(base.dim).len() as u64;
    let per = if slot == 2 { size(1) } else { size(2) };
    guard(per.saturating_mul(candidates.len() as u64))?;
    let start = Instant::now();
    let work = Work::default();
    let mut best: Option<(u64, Mode)> = None;
    for v in candidates {
        let c = count_s_inner(&base.clone().with_fixed(slot, v), &work);
        work.check()?;
        if best.is_none_or(|(b, _)| c > b) {
            best = Some((c, v));
        }
    }
    let (count, arg) = best.unwrap_or((0, [0, 0]));
    let bound = if slot == 2 { BoundForm::None } else { BoundForm::FixedN3 };
    Ok(CountReport::new(base.with_fixed(slot, arg), None, count, start, bound))
}

/// `#R_n` for the given `n` (an index may additionally be fixed).
pub fn count_r_n(q: &ResonanceQuery, n: Mode) -> Result<CountReport> {
    q.validate(3)?;
    let start = Instant::now();
    let work = Work::default();
    let mut count = 0u64;
    let inside = q.admits_output(n);
    for n2 in q.slot_points(2).into_iter().filter(|_| inside) {
        count += count_r_pair(q, &work, n, n2);
    }
    work.check()?;
    Ok(CountReport::new(q.clone(), Some(n), count, start, BoundForm::RnCount))
}

/// `#R_{n,n₂}` via the lattice circle `|2a − c|² = |c|² − 2μ`.
fn count_r_pair(q: &ResonanceQuery, work: &Work, n: Mode, n2: Mode) -> u64 {
    let c = sub(n, n2);
    let m = dot(c, c) - 2 * q.mu;
    let Some(r) = isqrt(m) else { return 0 };
    if !work.charge(2 * r as u64 + 1) {
        return 0;
    }
    let mut count = 0;
    let mut try_v = |v: Mode| {
        // v ≡ c (mod 2) componentwise, so a = (v + c)/2 is integral
        let a = [(v[0] + c[0]) / 2, (v[1] + c[1]) / 2];
        let n1 = add(n2, a);
        let n3 = sub(add(n2, c), a);
        if q.exclusions && (n1 == n2 || n3 == n2) {
            return;
        }
        if !q.admits(1, n1) || !q.admits(3, n3) {
            return;
        }
        assert_eq!(
            dot(n, n) - dot(n1, n1) + dot(n2, n2) - dot(n3, n3),
            2 * dot(sub(n1, n2), sub(n3, n2))
        );
        assert_eq!(q.mu, 2 * dot(sub(n1, n2), sub(n3, n2)));
        count += 1;
    };
    if q.dim == 1 {
        if (r * r == m) && (r - c[0]).rem_euclid(2) == 0 {
            try_v([r, 0]);
            if r != 0 {
                try_v([-r, 0]);
            }
        }
        return count;
    }
    for v0 in -r..=r {
        if (v0 - c[0]).rem_euclid(2) != 0 {
            continue;
        }
        let rest = m - v0 * v0;
        let Some(v1) = isqrt(rest) else { continue };
        if v1 * v1 != rest || (v1 - c[1]).rem_euclid(2) != 0 {
            continue;
        }
        try_v([v0, v1]);
        if v1 != 0 {
            try_v([v0, -v1]);
        }
    }
    count
}

/// Circle points `a = (v + c)/2` with `|v|² = |c|² − 2μ`, `v ≡ c (mod 2)`, i.e. all
/// `a` with `2a·(c − a) = μ`, minus `a ∈ {0, c}` when excluding.
fn circle_points(q: &ResonanceQuery, reps: &[Vec<Mode>], c: Mode) -> Vec<Mode> {
    let m = dot(c, c) - 2 * q.mu;
    if m < 0 || m as usize >= reps.len() {
        return Vec::new();
    }
    reps[m as usize]
        .iter()
        .filter(|v| (v[0] - c[0]).rem_euclid(2) == 0 && (v[1] - c[1]).rem_euclid(2) == 0)
        .map(|v| [(v[0] + c[0]) / 2, (v[1] + c[1]) / 2])
        .filter(|&a| !(q.exclusions && (a == [0, 0] || a == c)))
        .collect()
}

/// `max_{n, n₂} #R_{n,n₂}`, or `max_n` only when `n₂` is fixed in `q`.
///
/// Branch and bound over `c = n − n₂`: the unconstrained circle size bounds every
/// count with that `c`, so differences are visited by decreasing circle size and
/// the search stops once no circle can beat the best shell-constrained count.
pub fn max_count_r(q: &ResonanceQuery) -> Result<CountReport> {
    q.validate(3)?;
    if q.fixed.is_some_and(|f| f.slot != 2) {
        return Err(Error::precondition("max_count_r supports fixing n₂ only"));
    }
    let n2_values = q.slot_points(2);
    let r = |j: usize| q.shells[j].radius() as i64;
    // c = (n₁ − n₂) + (n₃ − n₂)
    let reach = r(0) + r(2) + 2 * r(1);
    let top = reach * reach + 2 * q.mu.abs();
    guard((top as u64).saturating_mul(if q.dim == 1 { 1 } else { 4 }))?;
    let start = Instant::now();
    let work = Work::default();
    let vr = isqrt(top).unwrap_or(0);
    let mut reps: Vec<Vec<Mode>> = vec![Vec::new(); top as usize + 1];
    for v0 in -vr..=vr {
        if q.dim == 1 {
            reps[(v0 * v0) as usize].push([v0, 0]);
            continue;
        }
        for v1 in -vr..=vr {
            let m = v0 * v0 + v1 * v1;
            if m <= top {
                reps[m as usize].push([v0, v1]);
            }
        }
    }
    // a fixed n₂ breaks the lattice symmetry, otherwise one c per orbit suffices
    let canonical = q.fixed.is_none();
    let mut diffs: Vec<(usize, Mode)> = Vec::new();
    for c0 in -reach..=reach {
        for c1 in if q.dim == 1 { 0..=0 } else { -reach..=reach } {
            let c = [c0, c1];
            if dot(c, c) > reach * reach {
                continue;
            }
            if canonical && !(if q.dim == 1 { c0 >= 0 } else { 0 <= c1 && c1 <= c0 }) {
                continue;
            }
            let size = circle_points(q, &reps, c).len();
            if size > 0 {
                diffs.push((size, c));
            }
        }
    }
    diffs.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
    let mut best: (u64, Mode, Mode) = (0, [0, 0], q.fixed.map_or([0, 0], |f| f.value));
    for (size, c) in diffs {
        if size as u64 <= best.0 {
            break;
        }
        let pts = circle_points(q, &reps, c);
        if !work.charge((n2_values.len() * pts.len()) as u64) {
            break;
        }
        for &n2 in &n2_values {
            if !q.admits_output(add(n2, c)) {
                continue;
            }
            let mut count = 0u64;
            for &a in &pts {
                let n1 = add(n2, a);
                let n3 = sub(add(n2, c), a);
                if q.shells[0].contains(n1) && q.shells[2].contains(n3) {
                    assert_eq!(q.mu, 2 * dot(sub(n1, n2), sub(n3, n2)));
                    count += 1;
                }
            }
            if count > best.0 {
                best = (count, add(n2, c), n2);
            }
        }
    }
    work.check()?;
    let (count, n, n2) = best;
    let mut report_q = q.clone();
    report_q.fixed = Some(FixedIndex { slot: 2, value: n2 });
    Ok(CountReport::new(report_q, Some(n), count, start, BoundForm::FixedN2))
}

/// `#R_n(n₁,…,n₅)`: `n₁ − n₂ + n₃ − n₄ + n₅ = n`,
/// `μ = n² − n₁² + n₂² − n₃² + n₄² − n₅²`, with `n₂, n₄ ∉ {n₁, n₃, n₅}` when excluding.
pub fn count_quintic_r(q: &ResonanceQuery, n: i64) -> Result<CountReport> {
    q.validate(5)?;
    let (p2, p4, p5) = (q.slot_points(2), q.slot_points(4), q.slot_points(5));
    guard((p2.len() as u64).saturating_mul(p4.len() as u64).saturating_mul(p5.len() as u64))?;
    let start = Instant::now();
    let mut count = 0u64;
    for &[n2, _] in &p2 {
        for &[n4, _] in &p4 {
            for &[n5, _] in &p5 {
                // n₁ + n₃ = s and n₁² + n₃² = t, so (n₁ − n₃)² = 2t − s²
                let s = n + n2 + n4 - n5;
                let t = n * n + n2 * n2 + n4 * n4 - n5 * n5 - q.mu;
                let disc = 2 * t - s * s;
                let Some(r) = isqrt(disc) else { continue };
                if r * r != disc || (s + r) % 2 != 0 {
                    continue;
                }
                let deltas: &[i64] = if r == 0 { &[0] } else { &[r, -r] };
                for &d in deltas {
                    let n1 = (s + d) / 2;
                    let n3 = s - n1;
                    if !q.admits(1, [n1, 0]) || !q.admits(3, [n3, 0]) {
                        continue;
                    }
                    if q.exclusions && [n1, n3, n5].iter().any(|&m| m == n2 || m == n4) {
                        continue;
                    }
                    assert_eq!(n1 - n2 + n3 - n4 + n5, n);
                    assert_eq!(n * n - n1 * n1 + n2 * n2 - n3 * n3 + n4 * n4 - n5 * n5, q.mu);
                    count += 1;
                }
            }
        }
    }
    Ok(CountReport::new(q.clone(), Some([n, 0]), count, start, BoundForm::Quintic))
}

/// Fits `ln count` against `ln N₁` over reports of increasing `N₁`.
pub fn bound_fit(reports: &[CountReport], bound: BoundForm) -> Result<RateFit> {
    if reports.len() < 3 {
        return Err(Error::precondition("bound fit needs at least 3 shells"));
    }
    if reports.iter().any(|r| r.bound_reference != bound) {
        return Err(Error::precondition("reports compared against different bounds"));
    }
    if reports.iter().any(|r| r.count == 0) {
        return Err(Error::precondition("a count is zero, the log-log fit is undefined"));
    }
    let points: Vec<(f64, f64)> = reports.iter().map(|r| (r.query.shells[0].scale(), r.count as f64)).collect();
    rate_fit(&points)
}
