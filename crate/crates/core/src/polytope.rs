//! Linear constraints on natural occupation numbers.
//!
//! Everything here works on `λ` sorted in descending order. For three
//! fermions in six modes the pure-state constraints are the Borland-Dennis
//! conditions `λ₁ + λ₂ + λ₄ ≤ 2` and `λ₁ + λ₆ = λ₂ + λ₅ = λ₃ + λ₄ = 1`; the
//! entanglement-class polytopes of the four characteristic states sit inside
//! them as `Slater ⊂ EPR ⊂ W ⊂ GHZ`.

use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::density::{random_factor, random_vector, MixedState};
use crate::error::{Error, Result};
use crate::fock::{one_rdm_of_density, OccupationVector, Sector};
use crate::gates::Target;
use crate::linalg::{eigvalsh_desc, fmt_num, C64};

/// Default membership tolerance on every slack.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

/// `coefficients · λ (sense) bound`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearInequality {
    pub name: String,
    pub coefficients: Vec<f64>,
    pub bound: f64,
    pub sense: Sense,
}

impl LinearInequality {
    pub fn new(name: impl Into<String>, coefficients: Vec<f64>, sense: Sense, bound: f64) -> Self {
        Self { name: name.into(), coefficients, bound, sense }
    }

    pub fn lhs(&self, lambda: &[f64]) -> f64 {
        self.coefficients.iter().zip(lambda).map(|(a, l)| a * l).sum()
    }

    /// Non-negative iff satisfied. Equalities report `-|residual|`.
    pub fn slack(&self, lambda: &[f64]) -> f64 {
        let lhs = self.lhs(lambda);
        match self.sense {
            Sense::Le => self.bound - lhs,
            Sense::Ge => lhs - self.bound,
            Sense::Eq => -(lhs - self.bound).abs(),
        }
    }
}

/// `(name, slack)` pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolytopeSpec {
    pub label: String,
    pub dim: usize,
    pub inequalities: Vec<LinearInequality>,
}

impl PolytopeSpec {
    pub fn new(label: impl Into<String>, dim: usize, inequalities: Vec<LinearInequality>) -> Result<Self> {
        if let Some(bad) = inequalities
            .iter()
            .find(|q| q.coefficients.len() != dim || q.coefficients.iter().chain([&q.bound]).any(|c| !c.is_finite()))
        {
            return Err(Error::InvalidInput(format!("constraint `{}` is malformed", bad.name)));
        }
        Ok(Self { label: label.into(), dim, inequalities })
    }

    pub fn slacks(&self, lambda: &[f64]) -> Vec<Slack> {
        self.inequalities
            .iter()
            .map(|q| Slack { name: q.name.clone(), value: q.slack(lambda) })
            .collect()
    }

    pub fn contains(&self, lambda: &[f64]) -> bool {
        self.contains_within(lambda, MEMBERSHIP_TOL)
    }

    pub fn contains_within(&self, lambda: &[f64], tol: f64) -> bool {
        lambda.len() == self.dim && self.inequalities.iter().all(|q| q.slack(lambda) >= -tol)
    }

    pub fn equalities(&self) -> impl Iterator<Item = &LinearInequality> {
        self.inequalities.iter().filter(|q| q.sense == Sense::Eq)
    }

    pub fn half_spaces(&self) -> impl Iterator<Item = &LinearInequality> {
        self.inequalities.iter().filter(|q| q.sense != Sense::Eq)
    }

    /// Vertices found by intersecting every `dim`-subset of constraint
    /// hyperplanes. Only meaningful for bounded polytopes; an empty result
    /// means the polytope is empty.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let rows: Vec<&LinearInequality> = self.inequalities.iter().collect();
        let mut found: Vec<Vec<f64>> = Vec::new();
        let d = self.dim;
        let mut chosen = Vec::with_capacity(d);
        subsets(rows.len(), d, &mut chosen, &mut |idx| {
            let a = DMatrix::from_fn(d, d, |r, c| rows[idx[r]].coefficients[c]);
            let b = DVector::from_fn(d, |r, _| rows[idx[r]].bound);
            let Some(x) = a.clone().lu().solve(&b) else { return };
            if (&a * &x - &b).norm() > 1e-9 {
                return;
            }
            let x: Vec<f64> = x.iter().copied().collect();
            if self.contains_within(&x, 1e-9) && !found.iter().any(|v| dist(v, &x) < 1e-9) {
                found.push(x);
            }
        });
        found.sort_by(|a, b| b.partial_cmp(a).expect("finite vertices"));
        found
    }

    pub fn is_feasible(&self) -> bool {
        !self.vertices().is_empty()
    }

    /// Writes one CSV row per constraint: `name,sense,bound,slack`.
    pub fn write_slack_csv<W: Write>(&self, lambda: &[f64], mut out: W) -> Result<()> {
        writeln!(out, "name,sense,bound,slack")?;
        for q in &self.inequalities {
            let sense = match q.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            writeln!(out, "{},{},{},{}", q.name, sense, fmt_num(q.bound), fmt_num(q.slack(lambda)))?;
        }
        Ok(())
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn subsets(n: usize, k: usize, chosen: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    let start = chosen.last().map_or(0, |&l| l + 1);
    for i in start..n {
        if n - i < k - chosen.len() {
            break;
        }
        chosen.push(i);
        subsets(n, k, chosen, visit);
        chosen.pop();
    }
}

fn unit(d: usize, terms: &[(usize, f64)]) -> Vec<f64> {
    let mut v = vec![0.0; d];
    for &(i, c) in terms {
        v[i] += c;
    }
    v
}

/// Ordering `1 ≥ λ₁ ≥ λ₂ ≥ λ₃ ≥ ½` plus the three pairing equalities.
fn borland_dennis_frame() -> Vec<LinearInequality> {
    vec![
        LinearInequality::new("l1<=1", unit(6, &[(0, 1.0)]), Sense::Le, 1.0),
        LinearInequality::new("l1>=l2", unit(6, &[(0, 1.0), (1, -1.0)]), Sense::Ge, 0.0),
        LinearInequality::new("l2>=l3", unit(6, &[(1, 1.0), (2, -1.0)]), Sense::Ge, 0.0),
        LinearInequality::new("l3>=1/2", unit(6, &[(2, 1.0)]), Sense::Ge, 0.5),
        LinearInequality::new("l1+l6=1", unit(6, &[(0, 1.0), (5, 1.0)]), Sense::Eq, 1.0),
        LinearInequality::new("l2+l5=1", unit(6, &[(1, 1.0), (4, 1.0)]), Sense::Eq, 1.0),
        LinearInequality::new("l3+l4=1", unit(6, &[(2, 1.0), (3, 1.0)]), Sense::Eq, 1.0),
    ]
}

/// Entanglement polytope of one of the four Borland-Dennis classes.
pub fn class_polytope_for(target: Target) -> PolytopeSpec {
    let mut q = borland_dennis_frame();
    let f1 = || LinearInequality::new("l1+l2-l3<=1", unit(6, &[(0, 1.0), (1, 1.0), (2, -1.0)]), Sense::Le, 1.0);
    match target {
        Target::Slater => {
            q.push(LinearInequality::new("l1=1", unit(6, &[(0, 1.0)]), Sense::Eq, 1.0));
            q.push(LinearInequality::new("l2=1", unit(6, &[(1, 1.0)]), Sense::Eq, 1.0));
            q.push(LinearInequality::new("l3=1", unit(6, &[(2, 1.0)]), Sense::Eq, 1.0));
        }
        Target::Epr => {
            q.push(LinearInequality::new("l1=1", unit(6, &[(0, 1.0)]), Sense::Eq, 1.0));
            q.push(LinearInequality::new("l2=l3", unit(6, &[(1, 1.0), (2, -1.0)]), Sense::Eq, 0.0));
        }
        Target::W => {
            q.push(f1());
            q.push(LinearInequality::new("l1+l2+l3>=2", unit(6, &[(0, 1.0), (1, 1.0), (2, 1.0)]), Sense::Ge, 2.0));
        }
        Target::Ghz => q.push(f1()),
    }
    PolytopeSpec::new(target.name(), 6, q).expect("static constraints are well formed")
}

/// Entanglement polytope by label (`slater`, `epr`, `w`, `ghz`).
pub fn class_polytope(label: &str) -> Result<PolytopeSpec> {
    Ok(class_polytope_for(label.parse()?))
}

/// Merit functions and slacks for a six-entry `λ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeritReport {
    /// `λ₂ − 1`; negative outside the Slater polytope.
    pub f_slater: f64,
    /// `λ₁ − 1`; negative outside the EPR polytope.
    pub f_epr: f64,
    /// `λ₁ + λ₂ + λ₃ − 2`; negative outside the W polytope.
    pub f_w: f64,
    /// `λ₁ + λ₂ − λ₃`.
    pub f1: f64,
    /// `λ₁ + λ₂ + λ₄`.
    pub f2: f64,
    pub slacks: Vec<Slack>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Merit {
    FSlater,
    FEpr,
    FW,
}

impl Merit {
    pub fn of(self, lambda: &[f64]) -> f64 {
        match self {
            Merit::FSlater => lambda[1] - 1.0,
            Merit::FEpr => lambda[0] - 1.0,
            Merit::FW => lambda[0] + lambda[1] + lambda[2] - 2.0,
        }
    }

    /// The class whose characteristic state is expected to violate this merit.
    pub fn paired_base(self) -> Target {
        match self {
            Merit::FSlater => Target::Epr,
            Merit::FEpr => Target::W,
            Merit::FW => Target::Ghz,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Merit::FSlater => "f_slater",
            Merit::FEpr => "f_epr",
            Merit::FW => "f_w",
        }
    }
}

impl fmt::Display for Merit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for Merit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "f_slater" | "slater" => Ok(Merit::FSlater),
            "f_epr" | "epr" => Ok(Merit::FEpr),
            "f_w" | "w" => Ok(Merit::FW),
            _ => Err(Error::UnknownLabel(s.into())),
        }
    }
}

fn require_six(lambda: &[f64]) -> Result<()> {
    if lambda.len() != 6 {
        return Err(Error::InvalidInput(format!("expected 6 occupation numbers, got {}", lambda.len())));
    }
    Ok(())
}

/// Merit functions of a six-entry `λ`, no slacks.
pub fn merit_values(lambda: &[f64]) -> Result<MeritReport> {
    require_six(lambda)?;
    Ok(MeritReport {
        f_slater: Merit::FSlater.of(lambda),
        f_epr: Merit::FEpr.of(lambda),
        f_w: Merit::FW.of(lambda),
        f1: lambda[0] + lambda[1] - lambda[2],
        f2: lambda[0] + lambda[1] + lambda[3],
        slacks: Vec::new(),
    })
}

/// Borland-Dennis membership of a pure-state spectrum: the inequality
/// `λ₁ + λ₂ + λ₄ ≤ 2` and the three pairings.
pub fn check_pure_bd(lambda: &OccupationVector) -> Result<(MeritReport, bool)> {
    check_pure_bd_within(lambda, MEMBERSHIP_TOL)
}

pub fn check_pure_bd_within(lambda: &OccupationVector, tol: f64) -> Result<(MeritReport, bool)> {
    let l = lambda.as_slice();
    let mut report = merit_values(l)?;
    report.slacks = vec![
        Slack { name: "l1+l2+l4<=2".into(), value: 2.0 - report.f2 },
        Slack { name: "l1+l6=1".into(), value: -(l[0] + l[5] - 1.0).abs() },
        Slack { name: "l2+l5=1".into(), value: -(l[1] + l[4] - 1.0).abs() },
        Slack { name: "l3+l4=1".into(), value: -(l[2] + l[3] - 1.0).abs() },
    ];
    let member = report.slacks.iter().all(|s| s.value >= -tol);
    Ok((report, member))
}

/// Whether `λ` is compatible with a state wedged from one `m`-fermion state
/// and `N − m` single-fermion states: `N − m` leading ones followed by a
/// pure-state spectrum of `m` fermions in `d − N + m` modes.
///
/// Supported stripped problems: `m ∈ {1, 2, d'−2, d'−1, d'}` for any
/// `d' = d − N + m` (single particles, pairs and their particle-hole duals)
/// and the Borland-Dennis case `m = 3, d' = 6`.
pub fn check_m_fermion(lambda: &[f64], n: usize, d: usize, m: usize) -> Result<bool> {
    check_m_fermion_within(lambda, n, d, m, MEMBERSHIP_TOL)
}

pub fn check_m_fermion_within(lambda: &[f64], n: usize, d: usize, m: usize, tol: f64) -> Result<bool> {
    if !(1 <= m && m <= n && n <= d) || lambda.len() != d {
        return Err(Error::Unsupported(format!("(N={n}, d={d}, m={m}) with {} entries", lambda.len())));
    }
    let lead = n - m;
    let stripped_modes = d - lead;
    let tail = &lambda[lead..];
    let supported = m <= 2 || m + 2 >= stripped_modes || (m == 3 && stripped_modes == 6);
    if !supported {
        return Err(Error::Unsupported(format!("no constraint table for {m} fermions in {stripped_modes} modes")));
    }
    if lambda.windows(2).any(|w| w[0] < w[1] - tol) || lambda.iter().any(|&l| l < -tol || l > 1.0 + tol) {
        return Ok(false);
    }
    if lambda[..lead].iter().any(|&l| (l - 1.0).abs() > tol) {
        return Ok(false);
    }
    if (tail.iter().sum::<f64>() - m as f64).abs() > tol * d as f64 {
        return Ok(false);
    }
    Ok(pure_spectrum_ok(tail, m, tol))
}

/// Pure-state constraints for `m` fermions over `tail.len()` modes.
fn pure_spectrum_ok(tail: &[f64], m: usize, tol: f64) -> bool {
    let dd = tail.len();
    if m == dd {
        return tail.iter().all(|&l| (l - 1.0).abs() <= tol);
    }
    // particle-hole duality maps m > dd/2 onto the hole spectrum
    if 2 * m > dd {
        let holes: Vec<f64> = tail.iter().rev().map(|l| 1.0 - l).collect();
        return pure_spectrum_ok(&holes, dd - m, tol);
    }
    match m {
        1 => (tail[0] - 1.0).abs() <= tol && tail[1..].iter().all(|l| l.abs() <= tol),
        2 => {
            let paired = tail.chunks(2).all(|p| p.len() == 1 || (p[0] - p[1]).abs() <= tol);
            let odd_zero = dd.is_multiple_of(2) || tail[dd - 1].abs() <= tol;
            paired && odd_zero
        }
        3 if dd == 6 => {
            let ov = OccupationVector::from_unsorted(tail.to_vec());
            check_pure_bd_within(&ov, tol).map(|(_, ok)| ok).unwrap_or(false)
        }
        _ => false,
    }
}

/// Slacks of `λ₁+λ₂−λ₃ ≤ 1+ε` and `λ₁+λ₂+λ₄ ≤ 2+ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakenedReport {
    pub epsilon: f64,
    pub slack_f1: f64,
    pub slack_f2: f64,
    pub member: bool,
}

/// Weakened Borland-Dennis check for a state whose largest eigenvalue is
/// `1 − ε`. No pairing equalities are assumed.
pub fn check_weakened(lambda: &[f64], epsilon: f64) -> Result<WeakenedReport> {
    require_six(lambda)?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidInput(format!("epsilon {epsilon} outside [0, 1]")));
    }
    let slack_f1 = 1.0 + epsilon - (lambda[0] + lambda[1] - lambda[2]);
    let slack_f2 = 2.0 + epsilon - (lambda[0] + lambda[1] + lambda[3]);
    let member = slack_f1 >= -MEMBERSHIP_TOL && slack_f2 >= -MEMBERSHIP_TOL;
    Ok(WeakenedReport { epsilon, slack_f1, slack_f2, member })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// `λ₁ + λ₂ − λ₃`
    F1,
    /// `λ₁ + λ₂ + λ₄`
    F2,
}

impl Objective {
    pub fn of(self, lambda: &[f64]) -> f64 {
        match self {
            Objective::F1 => lambda[0] + lambda[1] - lambda[2],
            Objective::F2 => lambda[0] + lambda[1] + lambda[3],
        }
    }

    /// Ceiling for a state with largest eigenvalue `1 − ε`.
    pub fn ceiling(self, epsilon: f64) -> f64 {
        match self {
            Objective::F1 => 1.0 + epsilon,
            Objective::F2 => 2.0 + epsilon,
        }
    }
}

/// Tunables of [`hill_climb_extremal`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HillClimbConfig {
    /// Number of pure components in the purification of `ρ₁`.
    pub rank: usize,
    pub initial_step: f64,
    /// Step multiplier applied after `patience` consecutive rejections.
    pub anneal: f64,
    pub patience: usize,
}

impl Default for HillClimbConfig {
    fn default() -> Self {
        Self { rank: 2, initial_step: 0.2, anneal: 0.95, patience: 100 }
    }
}

#[derive(Clone, Debug)]
pub struct HillClimbResult {
    pub value: f64,
    pub lambda: OccupationVector,
    pub state: MixedState,
    pub accepted: usize,
    /// Objective after each accepted step, starting with the initial value.
    pub history: Vec<f64>,
}

/// Mixed state `(1−ε)|ψ₀⟩⟨ψ₀| + ε ρ₁` in `Λ³(H₆)` with `ρ₁ = A A† / Tr(A A†)`.
struct NearPureForm {
    psi0: DVector<C64>,
    factor: DMatrix<C64>,
}

impl NearPureForm {
    fn density(&self, epsilon: f64) -> DMatrix<C64> {
        let psi = &self.psi0 / C64::new(self.psi0.norm(), 0.0);
        let mut rho1 = &self.factor * self.factor.adjoint();
        let tr = rho1.trace().re;
        rho1.unscale_mut(tr);
        &psi * psi.adjoint() * C64::new(1.0 - epsilon, 0.0) + rho1 * C64::new(epsilon, 0.0)
    }
}

fn spectrum_of(sector: &Sector, rho: &DMatrix<C64>) -> Vec<f64> {
    eigvalsh_desc(&one_rdm_of_density(sector, rho))
}

/// Random `(1−ε)|ψ₀⟩⟨ψ₀| + ε ρ₁` in the Borland-Dennis sector.
pub fn random_near_pure_state(epsilon: f64, rank: usize, seed: u64) -> Result<MixedState> {
    let sector = Sector::new(6, 3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let form = NearPureForm {
        psi0: random_vector(sector.dim(), &mut rng),
        factor: random_factor(sector.dim(), rank.max(1), &mut rng),
    };
    MixedState::new_unchecked(sector, form.density(epsilon))
}

/// Stochastic search for states of the form `(1−ε)|ψ₀⟩⟨ψ₀| + ε ρ₁` that
/// maximize `f1` or `f2`. Only improving (or equal) proposals are accepted.
pub fn hill_climb_extremal(epsilon: f64, objective: Objective, seed: u64, iterations: usize) -> Result<HillClimbResult> {
    hill_climb_extremal_with(epsilon, objective, seed, iterations, HillClimbConfig::default())
}

pub fn hill_climb_extremal_with(
    epsilon: f64,
    objective: Objective,
    seed: u64,
    iterations: usize,
    config: HillClimbConfig,
) -> Result<HillClimbResult> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidInput(format!("epsilon {epsilon} outside (0, 1)")));
    }
    if iterations == 0 {
        return Err(Error::InvalidInput("iterations must be at least 1".into()));
    }
    let sector = Sector::new(6, 3)?;
    let dim = sector.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = NearPureForm {
        psi0: random_vector(dim, &mut rng),
        factor: random_factor(dim, config.rank.max(1), &mut rng),
    };
    let mut best = objective.of(&spectrum_of(&sector, &current.density(epsilon)));
    let mut history = vec![best];
    let mut step = config.initial_step;
    let mut rejected_run = 0usize;

    for _ in 0..iterations {
        let scale = |v: &DVector<C64>| v.norm() / (v.len() as f64).sqrt();
        let psi_scale = scale(&current.psi0);
        let factor_scale = current.factor.norm() / (current.factor.len() as f64).sqrt();
        let proposal = NearPureForm {
            psi0: &current.psi0 + random_vector(dim, &mut rng) * C64::new(step * psi_scale, 0.0),
            factor: &current.factor
                + random_factor(dim, current.factor.ncols(), &mut rng) * C64::new(step * factor_scale, 0.0),
        };
        let value = objective.of(&spectrum_of(&sector, &proposal.density(epsilon)));
        if value >= best {
            current = proposal;
            best = value;
            history.push(value);
            rejected_run = 0;
        } else {
            rejected_run += 1;
            if rejected_run >= config.patience {
                step *= config.anneal;
                rejected_run = 0;
            }
        }
    }

    let state = MixedState::new_unchecked(sector.clone(), current.density(epsilon))?;
    let lambda = OccupationVector::from_unsorted(spectrum_of(&sector, state.matrix()));
    Ok(HillClimbResult { value: best, lambda, state, accepted: history.len() - 1, history })
}
