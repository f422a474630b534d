//! Marginal relations forced by perfect (anti-)correlation, and their
//! propagation around a closed chain.
//!
//! For two-valued `X, Y`: if `P(X = Y) = 1` then `P(X=1) = P(Y=1)`; if
//! `P(X ≠ Y) = 1` then `P(X=1) = 1 − P(Y=1)`. In general
//! `|P(X=1) − P(Y=1)| ≤ P(X ≠ Y)`. Chaining the equalities
//! `p0 = q1 = … = q_N = 1 − p0` pins every marginal to ½.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{xy_cells, ChainSpec, LinkKind};
use crate::prob::{JointDistribution, Probability, Tolerance, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SoritesError {
    #[error("`{0}` is not a two-valued variable shared by both sides")]
    NonBinaryVariable(String),
    #[error("chain is incomplete: positions {free:?} are not pinned by the constraints")]
    IncompleteChain { free: Vec<usize> },
    #[error("constraints are infeasible: {0}")]
    Infeasible(String),
    #[error("expected an even number (>= 4) of slacks ending in the dashed link, got {0}")]
    WrongSlackCount(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MarginalRelation {
    Equal,
    Complementary,
    Neither,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaOutcome {
    pub marginal_x: Probability,
    pub marginal_y: Probability,
    pub relation: MarginalRelation,
}

/// The four cells of a two-variable binary joint, `(lo,lo), (lo,hi),
/// (hi,lo), (hi,hi)`, where `hi` is the larger domain value (1 or +1).
fn binary_cells(joint: &JointDistribution) -> Result<[Probability; 4], SoritesError> {
    let vars = joint.schema().variables();
    if vars.len() != 2 {
        return Err(SoritesError::NonBinaryVariable(format!("{} variables", vars.len())));
    }
    let mut domains = [vars[0].domain.clone(), vars[1].domain.clone()];
    for (d, v) in domains.iter_mut().zip(vars) {
        d.sort_unstable();
        if d.len() != 2 {
            return Err(SoritesError::NonBinaryVariable(v.name.clone()));
        }
    }
    if domains[0] != domains[1] {
        return Err(SoritesError::NonBinaryVariable(vars[1].name.clone()));
    }
    let hi: Value = domains[0][1];
    let mut cells = [
        Probability::zero(),
        Probability::zero(),
        Probability::zero(),
        Probability::zero(),
    ];
    for (v, p) in joint.iter() {
        let i = usize::from(v[0] == hi) * 2 + usize::from(v[1] == hi);
        cells[i] = cells[i].clone() + p.clone();
    }
    Ok(cells)
}

/// Applies the lemma to a joint of two two-valued variables (first
/// variable is `X`). The conclusion is asserted, not assumed.
pub fn cr_lemma_check(joint: &JointDistribution) -> Result<LemmaOutcome, SoritesError> {
    let c = binary_cells(joint)?;
    Ok(lemma_from_cells(&c))
}

pub(crate) fn lemma_from_cells(c: &[Probability; 4]) -> LemmaOutcome {
    let marginal_x = c[2].clone() + c[3].clone();
    let marginal_y = c[1].clone() + c[3].clone();
    let mismatch = c[1].clone() + c[2].clone();
    let matched = c[0].clone() + c[3].clone();
    let relation = if mismatch.is_zero() {
        assert!(marginal_x.agrees(&marginal_y, Tolerance::EXACT), "lemma (a) violated");
        MarginalRelation::Equal
    } else if matched.is_zero() {
        assert!(
            marginal_x.agrees(&marginal_y.complement(), Tolerance::EXACT),
            "lemma (b) violated"
        );
        MarginalRelation::Complementary
    } else {
        MarginalRelation::Neither
    };
    LemmaOutcome {
        marginal_x,
        marginal_y,
        relation,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapBound {
    /// `|P(X=1) − P(Y=1)|`
    pub gap: Probability,
    /// `P(X ≠ Y)`
    pub bound: Probability,
}

pub fn cr_gap_bound(joint: &JointDistribution) -> Result<GapBound, SoritesError> {
    let c = binary_cells(joint)?;
    let gap = (c[2].clone() + c[3].clone()).abs_diff(&(c[1].clone() + c[3].clone()));
    let bound = c[1].clone() + c[2].clone();
    assert!(
        gap <= bound || gap.agrees(&bound, Tolerance::EXACT),
        "marginal gap {gap} exceeds mismatch {bound}"
    );
    Ok(GapBound { gap, bound })
}

/// A linear constraint between two marginals of a chain.
#[derive(Clone, Debug, PartialEq)]
pub enum ChainRelation {
    /// `v[i] = v[j]`
    Equal(usize, usize),
    /// `v[i] = 1 − v[j]`
    Complement(usize, usize),
    /// `v[i] = p`
    Pin(usize, Probability),
}

/// Marginal-equality constraints over labelled positions, solved exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainConstraints {
    labels: Vec<String>,
    relations: Vec<ChainRelation>,
}

impl ChainConstraints {
    pub fn new(labels: Vec<String>) -> Self {
        ChainConstraints {
            labels,
            relations: Vec::new(),
        }
    }

    /// The full Sorites system of a chain: one equality per solid link and
    /// the complement relation of the dashed link. Position `k` is the
    /// marginal at angle index `k`: `p_k` (Bob) for even `k`, `q_k`
    /// (Alice) for odd `k`.
    pub fn for_chain(chain: &ChainSpec) -> Self {
        let labels = (0..=chain.n_links())
            .map(|k| format!("{}{k}", if k % 2 == 0 { 'p' } else { 'q' }))
            .collect();
        let mut c = ChainConstraints::new(labels);
        for link in chain.links() {
            c.relations.push(match link.kind {
                LinkKind::Solid => ChainRelation::Equal(link.from as usize, link.to as usize),
                LinkKind::Dashed => ChainRelation::Complement(link.from as usize, link.to as usize),
            });
        }
        c
    }

    pub fn relate(mut self, r: ChainRelation) -> Self {
        self.relations.push(r);
        self
    }

    /// Drops the `i`-th relation.
    pub fn without(mut self, i: usize) -> Self {
        self.relations.remove(i);
        self
    }

    pub fn pin(self, position: usize, value: Probability) -> Self {
        self.relate(ChainRelation::Pin(position, value))
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn relations(&self) -> &[ChainRelation] {
        &self.relations
    }

    /// Solves for every position. Each position is tracked as
    /// `sign · root + offset` of its component's root; a relation either
    /// fixes the root, is implied, or contradicts.
    pub fn solve(&self) -> Result<Vec<Probability>, SoritesError> {
        let n = self.labels.len();
        // (root, sign, offset) per position; sign is ±1.
        let mut expr: Vec<(usize, i64, Probability)> = (0..n).map(|i| (i, 1, Probability::zero())).collect();
        let mut fixed: Vec<Option<Probability>> = vec![None; n];
        let signed = |s: i64, p: Probability| if s < 0 { Probability::zero() - p } else { p };

        for rel in &self.relations {
            // Normalize to v[i] = c + d · v[j], or a pin.
            let (i, j, c, d) = match rel {
                ChainRelation::Equal(i, j) => (*i, *j, Probability::zero(), 1),
                ChainRelation::Complement(i, j) => (*i, *j, Probability::one(), -1),
                ChainRelation::Pin(i, p) => {
                    self.check_index(*i)?;
                    let (root, s, o) = expr[*i].clone();
                    let value = signed(s, p.clone() - o);
                    set_root(&mut fixed, root, value, &self.labels)?;
                    continue;
                }
            };
            self.check_index(i)?;
            self.check_index(j)?;
            let (ri, si, oi) = expr[i].clone();
            let (rj, sj, oj) = expr[j].clone();
            if ri != rj {
                // Merge j's component into i's: v[rj] = (v[i] − c − d·oj)/(d·sj),
                // and v[i] = si·v[ri] + oi.
                let k = d * sj;
                let base = signed(k, oi - c - signed(d, oj));
                for e in expr.iter_mut() {
                    if e.0 == rj {
                        // v = e.1·v[rj] + e.2 with v[rj] = k·si·v[ri] + base
                        let new_sign = e.1 * k * si;
                        let new_off = signed(e.1, base.clone()) + e.2.clone();
                        *e = (ri, new_sign, new_off);
                    }
                }
                if let Some(vj) = fixed[rj].take() {
                    // v[ri] = (v[rj] − base) / (k · si)
                    let vi = signed(k * si, vj - base);
                    set_root(&mut fixed, ri, vi, &self.labels)?;
                }
            } else {
                // si·r + oi = c + d·(sj·r + oj)
                let coef = si - d * sj;
                let rhs = c + signed(d, oj) - oi;
                if coef == 0 {
                    if !rhs.agrees(&Probability::zero(), Tolerance::EXACT) {
                        return Err(SoritesError::Infeasible(format!(
                            "cycle through {} requires 0 = {rhs}",
                            self.labels[i]
                        )));
                    }
                } else {
                    let value = rhs / Probability::ratio(coef, 1);
                    set_root(&mut fixed, ri, value, &self.labels)?;
                }
            }
        }

        let free: Vec<usize> = (0..n).filter(|&i| fixed[expr[i].0].is_none()).collect();
        if !free.is_empty() {
            return Err(SoritesError::IncompleteChain { free });
        }
        let values: Vec<Probability> = (0..n)
            .map(|i| {
                let (root, s, o) = &expr[i];
                signed(*s, fixed[*root].clone().expect("fixed")) + o.clone()
            })
            .collect();
        for (label, v) in self.labels.iter().zip(&values) {
            if v.is_negative() || *v > Probability::one() {
                return Err(SoritesError::Infeasible(format!("{label} = {v} is not a probability")));
            }
        }
        Ok(values)
    }

    fn check_index(&self, i: usize) -> Result<(), SoritesError> {
        if i < self.labels.len() {
            Ok(())
        } else {
            Err(SoritesError::Infeasible(format!("relation refers to position {i}")))
        }
    }
}

fn set_root(
    fixed: &mut [Option<Probability>],
    root: usize,
    value: Probability,
    labels: &[String],
) -> Result<(), SoritesError> {
    match &fixed[root] {
        Some(old) if !old.agrees(&value, Tolerance::EXACT) => Err(SoritesError::Infeasible(format!(
            "{} would equal both {old} and {value}",
            labels[root]
        ))),
        Some(_) => Ok(()),
        None => {
            fixed[root] = Some(value);
            Ok(())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Wing {
    Alice,
    Bob,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalEntry {
    pub owner: Wing,
    pub angle_index: u32,
    pub value: Probability,
}

/// `p0, q1, p2, …, q_N`: Bob's marginals at even angle indices, Alice's at
/// odd ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainMarginals {
    pub entries: Vec<MarginalEntry>,
}

impl ChainMarginals {
    pub fn from_values(values: Vec<Probability>) -> Self {
        ChainMarginals {
            entries: values
                .into_iter()
                .enumerate()
                .map(|(k, value)| MarginalEntry {
                    owner: if k % 2 == 0 { Wing::Bob } else { Wing::Alice },
                    angle_index: k as u32,
                    value,
                })
                .collect(),
        }
    }

    pub fn values(&self) -> impl Iterator<Item = &Probability> {
        self.entries.iter().map(|e| &e.value)
    }

    pub fn all_half(&self) -> bool {
        self.values().all(|v| *v == Probability::half())
    }
}

impl fmt::Display for ChainMarginals {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|e| {
                let tag = if e.owner == Wing::Bob { 'p' } else { 'q' };
                format!("{tag}{}={}", e.angle_index, e.value)
            })
            .collect();
        f.write_str(&parts.join(", "))
    }
}

/// Solves a chain constraint system and labels the result by wing.
pub fn solve_sorites_chain(constraints: &ChainConstraints) -> Result<ChainMarginals, SoritesError> {
    constraints.solve().map(ChainMarginals::from_values)
}

/// Departure of one link from its ideal: `P(X≠Y)` on a solid link,
/// `P(X=Y)` on the dashed link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkSlack {
    pub kind: LinkKind,
    pub epsilon: Probability,
}

impl LinkSlack {
    pub fn from_cells(kind: LinkKind, c: &[Probability; 4]) -> Self {
        let epsilon = match kind {
            LinkKind::Solid => c[1].clone() + c[2].clone(),
            LinkKind::Dashed => c[0].clone() + c[3].clone(),
        };
        LinkSlack { kind, epsilon }
    }

    pub fn from_table(kind: LinkKind, table: &JointDistribution) -> Self {
        Self::from_cells(kind, &xy_cells(table))
    }
}

/// Uniform bound `B = (Σ ε)/2` on `|v − ½|` for every chain marginal `v`
/// consistent with the slacked links (solid links in chain order, dashed
/// last).
///
/// Going once around the cycle from any position back to itself, each link
/// moves the marginal by at most its ε and the dashed link reflects it
/// through ½, so `|2v − 1| ≤ Σ ε`.
pub fn chain_marginal_bound(slacks: &[LinkSlack]) -> Result<Probability, SoritesError> {
    let n = slacks.len();
    let shape_ok = n >= 4
        && n.is_multiple_of(2)
        && slacks[..n - 1].iter().all(|s| s.kind == LinkKind::Solid)
        && slacks[n - 1].kind == LinkKind::Dashed;
    if !shape_ok {
        return Err(SoritesError::WrongSlackCount(n));
    }
    let total: Probability = slacks.iter().map(|s| &s.epsilon).sum();
    Ok(total * Probability::half())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_chain, mismatch_probability, xy_table, Angle};

    fn r(n: i64, d: i64) -> Probability {
        Probability::ratio(n, d)
    }

    fn t(c: [Probability; 4]) -> JointDistribution {
        xy_table(c).unwrap()
    }

    #[test]
    fn lemma_examples() {
        let o = cr_lemma_check(&t([r(1, 3), r(0, 1), r(0, 1), r(2, 3)])).unwrap();
        assert_eq!(o.relation, MarginalRelation::Equal);
        assert_eq!((o.marginal_x, o.marginal_y), (r(2, 3), r(2, 3)));

        let o = cr_lemma_check(&t([r(0, 1), r(1, 4), r(3, 4), r(0, 1)])).unwrap();
        assert_eq!(o.relation, MarginalRelation::Complementary);
        assert_eq!(o.marginal_x, r(3, 4));
        assert_eq!(o.marginal_x, o.marginal_y.complement());

        let o = cr_lemma_check(&t([r(1, 4), r(1, 4), r(1, 4), r(1, 4)])).unwrap();
        assert_eq!(o.relation, MarginalRelation::Neither);
        assert_eq!((o.marginal_x, o.marginal_y), (r(1, 2), r(1, 2)));
    }

    #[test]
    fn lemma_rejects_non_binary() {
        use crate::prob::{Variable, VariableSchema};
        let schema = VariableSchema::new(vec![Variable::new("X", [0, 1, 2]), Variable::new("Y", [0, 1])]).unwrap();
        let d = JointDistribution::from_positional(schema, [(vec![2, 0], r(1, 1))]).unwrap();
        assert!(matches!(cr_lemma_check(&d), Err(SoritesError::NonBinaryVariable(_))));
        assert!(matches!(cr_gap_bound(&d), Err(SoritesError::NonBinaryVariable(_))));
    }

    #[test]
    fn gap_bound_examples() {
        let g = cr_gap_bound(&t([r(1, 2), r(0, 1), r(0, 1), r(1, 2)])).unwrap();
        assert_eq!((g.gap, g.bound), (r(0, 1), r(0, 1)));
        let g = cr_gap_bound(&t([r(1, 2), r(0, 1), r(1, 2), r(0, 1)])).unwrap();
        assert_eq!((g.gap, g.bound), (r(1, 2), r(1, 2)));
    }

    #[test]
    fn full_chain_forces_half() {
        for n in [3, 45] {
            let c = build_chain(n).unwrap();
            let m = solve_sorites_chain(&ChainConstraints::for_chain(&c)).unwrap();
            assert_eq!(m.entries.len(), c.experiment_count());
            assert!(m.all_half());
            assert_eq!(m.entries[0].owner, Wing::Bob);
            assert_eq!(m.entries[1].owner, Wing::Alice);
        }
    }

    #[test]
    fn missing_dashed_link_is_incomplete() {
        let c = build_chain(3).unwrap();
        let sys = ChainConstraints::for_chain(&c).without(3);
        assert!(matches!(sys.solve(), Err(SoritesError::IncompleteChain { .. })));
        let sys = ChainConstraints::for_chain(&c).without(1);
        assert!(matches!(sys.solve(), Err(SoritesError::IncompleteChain { .. })));
    }

    #[test]
    fn pinned_marginal_off_half_is_infeasible() {
        let c = build_chain(5).unwrap();
        for pos in 0..=5 {
            let sys = ChainConstraints::for_chain(&c).pin(pos, r(1, 1));
            assert!(matches!(sys.solve(), Err(SoritesError::Infeasible(_))), "pos {pos}");
            let sys = ChainConstraints::for_chain(&c).pin(pos, r(1, 2));
            assert!(sys.solve().is_ok());
        }
    }

    #[test]
    fn open_chain_with_pin_is_determined() {
        let c = build_chain(3).unwrap();
        let sys = ChainConstraints::for_chain(&c).without(3).pin(2, r(1, 1));
        assert_eq!(sys.solve().unwrap(), vec![r(1, 1); 4]);
    }

    #[test]
    fn out_of_range_solution_is_infeasible() {
        let sys = ChainConstraints::new(vec!["a".into(), "b".into()])
            .relate(ChainRelation::Complement(0, 1))
            .pin(1, r(3, 2));
        assert!(matches!(sys.solve(), Err(SoritesError::Infeasible(_))));
    }

    #[test]
    fn bound_examples() {
        let zero = |kind| LinkSlack { kind, epsilon: r(0, 1) };
        let slacks = [
            zero(LinkKind::Solid),
            zero(LinkKind::Solid),
            zero(LinkKind::Solid),
            zero(LinkKind::Dashed),
        ];
        assert_eq!(chain_marginal_bound(&slacks).unwrap(), r(0, 1));

        let s2 = mismatch_probability(Angle::from_degrees(2)).unwrap();
        let mut slacks: Vec<LinkSlack> = (0..45)
            .map(|_| LinkSlack {
                kind: LinkKind::Solid,
                epsilon: s2.clone(),
            })
            .collect();
        slacks.push(LinkSlack {
            kind: LinkKind::Dashed,
            epsilon: mismatch_probability(Angle::from_degrees(90)).unwrap().complement(),
        });
        let b = chain_marginal_bound(&slacks).unwrap().to_f64();
        // 45 · sin²(2°) / 2 from a 40-digit reference.
        assert!((b - 0.027_404_434_576_977_214).abs() < 1e-12, "{b}");

        assert!(matches!(
            chain_marginal_bound(&slacks[..3]),
            Err(SoritesError::WrongSlackCount(3))
        ));
        let mut bad = slacks.clone();
        bad.swap(0, 45);
        assert!(chain_marginal_bound(&bad).is_err());
    }

    /// Exhaustive search over marginal tuples (p0, q1, p2, q3) on a grid of
    /// step 1/40 satisfying the slacked link constraints; the largest
    /// |p0 − ½| found must equal the returned bound.
    #[test]
    fn bound_matches_brute_force_n3() {
        let eps = [r(1, 10), r(0, 1), r(0, 1), r(0, 1)];
        let slacks: Vec<LinkSlack> = eps
            .iter()
            .enumerate()
            .map(|(i, e)| LinkSlack {
                kind: if i == 3 { LinkKind::Dashed } else { LinkKind::Solid },
                epsilon: e.clone(),
            })
            .collect();
        let bound = chain_marginal_bound(&slacks).unwrap();
        assert_eq!(bound, r(1, 20));

        let grid: Vec<Probability> = (0..=40).map(|k| r(k, 40)).collect();
        let mut best = r(0, 1);
        let mut worst_entry = r(0, 1);
        for p0 in &grid {
            for q1 in &grid {
                if p0.abs_diff(q1) > eps[0] {
                    continue;
                }
                for p2 in &grid {
                    if q1.abs_diff(p2) > eps[1] {
                        continue;
                    }
                    for q3 in &grid {
                        if p2.abs_diff(q3) > eps[2] || q3.abs_diff(&p0.complement()) > eps[3] {
                            continue;
                        }
                        let d = p0.abs_diff(&r(1, 2));
                        if d > best {
                            best = d;
                        }
                        for v in [q1, p2, q3] {
                            let d = v.abs_diff(&r(1, 2));
                            if d > worst_entry {
                                worst_entry = d;
                            }
                        }
                    }
                }
            }
        }
        assert_eq!(best, bound);
        assert!(worst_entry <= bound);
    }
}
