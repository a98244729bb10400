use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::index::{lift_functional, MomentIndex};
use super::presolve::{presolve, Presolved};
use super::MomentError;
use crate::planning::{clique_partition, PlanningPop};
use crate::poly::{monomial_basis, Monomial, Polynomial, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sparsity {
    #[serde(rename = "dense")]
    Dense,
    #[serde(rename = "cs")]
    Correlative,
}

impl fmt::Display for Sparsity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sparsity::Dense => "dense",
            Sparsity::Correlative => "cs",
        })
    }
}

impl FromStr for Sparsity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dense" => Ok(Sparsity::Dense),
            "cs" => Ok(Sparsity::Correlative),
            _ => Err(format!("unknown sparsity `{s}` (expected dense or cs)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxOptions {
    pub order: u32,
    pub sparsity: Sparsity,
    /// Refuse to build relaxations with more pseudo-moments than this.
    pub max_moments: usize,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self {
            order: 2,
            sparsity: Sparsity::Correlative,
            max_moments: 250_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum BlockRole {
    Moment { clique: usize },
    Localizing { clique: usize, inequality: usize },
}

/// `coef · y[moment]` contribution to the upper-triangle entry `(row, col)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockEntry {
    pub row: u32,
    pub col: u32,
    pub moment: u32,
    pub coef: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentBlock {
    pub role: BlockRole,
    pub size: usize,
    pub entries: Vec<BlockEntry>,
}

impl MomentBlock {
    pub fn clique(&self) -> usize {
        match self.role {
            BlockRole::Moment { clique } | BlockRole::Localizing { clique, .. } => clique,
        }
    }

    /// Numeric matrix for a given moment vector.
    pub fn evaluate(&self, y: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for e in &self.entries {
            let (r, c) = (e.row as usize, e.col as usize);
            m[(r, c)] += e.coef * y[e.moment as usize];
            if r != c {
                m[(c, r)] += e.coef * y[e.moment as usize];
            }
        }
        m
    }
}

/// `Σ coef · y[pos] = rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// Moment relaxation in terms of the pseudo-moments: minimize `objective · y` subject to
/// `equalities` and every block being PSD.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSdp {
    pub index: MomentIndex,
    pub blocks: Vec<MomentBlock>,
    pub equalities: Vec<LinearRow>,
    pub objective: Vec<(usize, f64)>,
}

impl MomentSdp {
    pub fn objective_value(&self, y: &[f64]) -> f64 {
        self.objective.iter().map(|&(p, c)| c * y[p]).sum()
    }

    /// Index of the moment block of clique `k`.
    pub fn moment_block(&self, k: usize) -> Option<usize> {
        self.blocks
            .iter()
            .position(|b| b.role == BlockRole::Moment { clique: k })
    }
}

fn half_up(d: u32) -> u32 {
    d.div_ceil(2)
}

/// Smallest admissible relaxation order: every constraint and the objective must fit in
/// degree `2κ`, and `κ >= 1`.
pub fn relaxation_order(pop: &PlanningPop) -> u32 {
    pop.polynomials().map(|p| half_up(p.degree())).max().unwrap_or(0).max(1)
}

fn clique_for(cliques: &[Vec<VarId>], p: &Polynomial) -> Result<usize, MomentError> {
    let s = p.support_vars();
    cliques
        .iter()
        .position(|c| s.iter().all(|v| c.binary_search(v).is_ok()))
        .ok_or_else(|| {
            MomentError::NotInClique(Monomial::from_powers(s.into_iter().map(|v| (v, 1))))
        })
}

fn build(
    pop: &PlanningPop,
    cliques: Vec<Vec<VarId>>,
    order: u32,
    max_moments: usize,
) -> Result<MomentSdp, MomentError> {
    let needed = relaxation_order(pop);
    if order < needed {
        return Err(MomentError::Order { order, needed });
    }
    let count = MomentIndex::count(&cliques, order);
    if count > max_moments as u64 {
        return Err(MomentError::TooLarge(format!(
            "order {order} needs up to {count} moments over cliques of sizes {:?} (limit {max_moments})",
            cliques.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    let index = MomentIndex::build(&cliques, order);
    let cliques = index.cliques().to_vec();
    let pos = |m: &Monomial| -> Result<u32, MomentError> {
        index
            .position(m)
            .map(|p| p as u32)
            .ok_or_else(|| MomentError::NotInClique(m.clone()))
    };

    let mut blocks = Vec::new();
    for (k, c) in cliques.iter().enumerate() {
        let basis = monomial_basis(c, order);
        let el = basis.elements();
        let mut entries = Vec::with_capacity(el.len() * (el.len() + 1) / 2);
        for i in 0..el.len() {
            for j in i..el.len() {
                entries.push(BlockEntry {
                    row: i as u32,
                    col: j as u32,
                    moment: pos(&el[i].mul(&el[j]))?,
                    coef: 1.0,
                });
            }
        }
        blocks.push(MomentBlock {
            role: BlockRole::Moment { clique: k },
            size: el.len(),
            entries,
        });
    }
    for (gi, g) in pop.inequalities.iter().enumerate() {
        let k = clique_for(&cliques, g)?;
        let basis = monomial_basis(&cliques[k], order - half_up(g.degree()));
        let el = basis.elements();
        let mut entries = Vec::new();
        for i in 0..el.len() {
            for j in i..el.len() {
                let ab = el[i].mul(&el[j]);
                for (m, c) in g.terms() {
                    entries.push(BlockEntry {
                        row: i as u32,
                        col: j as u32,
                        moment: pos(&m.mul(&ab))?,
                        coef: c,
                    });
                }
            }
        }
        blocks.push(MomentBlock {
            role: BlockRole::Localizing {
                clique: k,
                inequality: gi,
            },
            size: el.len(),
            entries,
        });
    }

    let mut equalities = vec![LinearRow {
        terms: vec![(0, 1.0)],
        rhs: 1.0,
    }];
    for h in &pop.equalities {
        let k = clique_for(&cliques, h)?;
        let deg = h.degree();
        if deg > 2 * order {
            return Err(MomentError::DegreeTooHigh {
                degree: deg,
                max: 2 * order,
            });
        }
        for beta in monomial_basis(&cliques[k], 2 * order - deg).elements() {
            let mut terms: Vec<(usize, f64)> = Vec::with_capacity(h.num_terms());
            for (m, c) in h.terms() {
                terms.push((pos(&m.mul(beta))? as usize, c));
            }
            terms.sort_by_key(|t| t.0);
            equalities.push(LinearRow { terms, rhs: 0.0 });
        }
    }
    let objective = lift_functional(&pop.objective, &index)?;
    Ok(MomentSdp {
        index,
        blocks,
        equalities,
        objective,
    })
}

/// Single moment matrix over all variables of `pop`.
pub fn dense_relaxation(pop: &PlanningPop, order: u32) -> Result<MomentSdp, MomentError> {
    dense_with_limit(pop, order, RelaxOptions::default().max_moments)
}

fn dense_with_limit(pop: &PlanningPop, order: u32, max: usize) -> Result<MomentSdp, MomentError> {
    let all = pop.densified().cliques;
    let cliques = if all.iter().all(Vec::is_empty) { Vec::new() } else { all };
    build(pop, cliques, order, max)
}

/// One moment matrix per clique of `pop`.
pub fn sparse_relaxation(pop: &PlanningPop, order: u32) -> Result<MomentSdp, MomentError> {
    sparse_with_limit(pop, order, RelaxOptions::default().max_moments)
}

fn sparse_with_limit(pop: &PlanningPop, order: u32, max: usize) -> Result<MomentSdp, MomentError> {
    let cliques = clique_partition(pop)?;
    build(pop, cliques, order, max)
}

/// Presolved problem together with its relaxation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Relaxation {
    pub options: RelaxOptions,
    pub presolved: Presolved,
    pub sdp: MomentSdp,
}

pub fn relax(pop: &PlanningPop, opts: &RelaxOptions) -> Result<Relaxation, MomentError> {
    let presolved = presolve(pop)?;
    let sdp = match opts.sparsity {
        Sparsity::Dense => dense_with_limit(&presolved.pop, opts.order, opts.max_moments)?,
        Sparsity::Correlative => sparse_with_limit(&presolved.pop, opts.order, opts.max_moments)?,
    };
    Ok(Relaxation {
        options: opts.clone(),
        presolved,
        sdp,
    })
}

/// Numeric `M_κ(y, I_k)` of clique `k`.
pub fn assemble_moment_matrix(y: &[f64], k: usize, idx: &MomentIndex) -> DMatrix<f64> {
    let basis = monomial_basis(&idx.cliques()[k], idx.order());
    let el = basis.elements();
    DMatrix::from_fn(el.len(), el.len(), |i, j| {
        y[idx.position(&el[i].mul(&el[j])).expect("clique moment")]
    })
}

fn moment_name(m: &Monomial, vars: &[VarId]) -> String {
    let e: Vec<String> = m.exponents_over(vars).iter().map(u32::to_string).collect();
    format!("y_{{{}}}", e.join(","))
}

/// Symbolic matrix of block `b`, one row per line, entries separated by ` & `.
/// Moments are named `y_{α}` with `α` the exponents over the block's clique variables.
pub fn symbolic_text(sdp: &MomentSdp, b: usize) -> String {
    let blk = &sdp.blocks[b];
    let vars = &sdp.index.cliques()[blk.clique()];
    let mut cells: BTreeMap<(u32, u32), Vec<String>> = BTreeMap::new();
    for e in &blk.entries {
        let name = moment_name(sdp.index.moment(e.moment as usize), vars);
        let term = if e.coef == 1.0 {
            name
        } else {
            format!("{:?}*{}", e.coef, name)
        };
        cells.entry((e.row, e.col)).or_default().push(term);
    }
    let mut out = String::new();
    for i in 0..blk.size as u32 {
        let row: Vec<String> = (0..blk.size as u32)
            .map(|j| {
                let key = if i <= j { (i, j) } else { (j, i) };
                cells.get(&key).map(|t| t.join(" + ")).unwrap_or_else(|| "0".into())
            })
            .collect();
        out.push_str(&row.join(" & "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Registry;

    fn chain_pop() -> PlanningPop {
        let mut registry = Registry::new();
        let x = registry.add_block("x", 5).unwrap();
        let v = |i: usize| Polynomial::var(x[i]);
        PlanningPop {
            registry,
            objective: &(&v(0) * &v(2)) + &(&v(2) * &v(4)),
            inequalities: vec![&Polynomial::constant(1.0) - &(&v(1) * &v(1))],
            equalities: vec![&(&v(3) * &v(4)) - &Polynomial::constant(0.5)],
            cliques: vec![x[0..3].to_vec(), x[2..5].to_vec()],
            ..Default::default()
        }
    }

    #[test]
    fn sparse_blocks_are_smaller() {
        let pop = chain_pop();
        let s = sparse_relaxation(&pop, 2).unwrap();
        let sizes: Vec<usize> = s.blocks.iter().map(|b| b.size).collect();
        assert_eq!(sizes, vec![10, 10, 4]);
        let d = dense_relaxation(&pop, 2).unwrap();
        assert_eq!(d.blocks[0].size, 21);
    }

    #[test]
    fn order_check() {
        let pop = chain_pop();
        assert_eq!(relaxation_order(&pop), 1);
        let mut cubic = pop.clone();
        cubic.objective = &cubic.objective * &Polynomial::var(VarId(2));
        assert_eq!(
            sparse_relaxation(&cubic, 1),
            Err(MomentError::Order { order: 1, needed: 2 })
        );
    }

    #[test]
    fn dirac_moments_give_rank_one() {
        let pop = chain_pop();
        let s = sparse_relaxation(&pop, 2).unwrap();
        let pt = [0.3, -0.2, 0.7, 1.1, -0.4];
        let y: Vec<f64> = s.index.moments().iter().map(|m| m.eval(&pt)).collect();
        for k in 0..2 {
            let m = assemble_moment_matrix(&y, k, &s.index);
            let basis = monomial_basis(&s.index.cliques()[k], 2);
            let v = nalgebra::DVector::from_iterator(basis.len(), basis.elements().iter().map(|b| b.eval(&pt)));
            assert!((&m - &v * v.transpose()).amax() < 1e-15);
            assert_eq!(m, s.blocks[s.moment_block(k).unwrap()].evaluate(&y));
        }
        // localizing block is g(x) v vᵀ
        let loc = s.blocks[2].evaluate(&y);
        let g = 1.0 - pt[1] * pt[1];
        let basis = monomial_basis(&s.index.cliques()[0], 1);
        let v = nalgebra::DVector::from_iterator(basis.len(), basis.elements().iter().map(|b| b.eval(&pt)));
        assert!((&loc - &v * v.transpose() * g).amax() < 1e-15);
        assert!((s.objective_value(&y) - pop.objective.eval(&pt)).abs() < 1e-15);
    }

    #[test]
    fn too_large_is_reported() {
        let pop = chain_pop();
        let opts = RelaxOptions {
            max_moments: 10,
            ..Default::default()
        };
        assert!(matches!(relax(&pop, &opts), Err(MomentError::TooLarge(_))));
    }
}
