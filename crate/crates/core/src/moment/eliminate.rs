//! Elimination of the linear moment equalities, giving an SDP in the standard dual form.
//!
//! Writing the solution set of the equalities as `y = y0 + N z`, each moment block becomes
//! `M(y) = M(y0) + Σ_j z_j M(N_j)`. This is the slack `S = C − Σ z_j A_j` of the standard dual
//! with `C = M(y0)` and `A_j = −M(N_j)`, and `min f·y = f·y0 − max (−Nᵀf)·z`.
//!
//! Columns are processed in groups (one per clique, in chain order). A row belongs to the
//! last group among its columns. Within a group the rows are reduced by rank-revealing QR,
//! pivoting first on columns private to the group, then on columns that later groups share,
//! and only then on free variables introduced by earlier groups. Each free variable is a
//! moment of the group that introduced it, so `N` stays local to neighbouring cliques.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::relax::{MomentBlock, MomentSdp};
use super::MomentError;
use crate::sdp::{BlockKind, BlockSpec, ConicSdp, SparseSym};

/// Trailing blocks below this fraction of the group's largest coefficient count as zero.
const RANK_TOL: f64 = 1e-9;
/// A zero row with a larger right-hand side proves the equalities inconsistent.
const RHS_TOL: f64 = 1e-6;
/// Coefficients of `N` below this are dropped.
const BACK_DROP: f64 = 1e-14;
/// Largest dense per-clique system the elimination will form.
const MAX_GROUP_ENTRIES: usize = 30_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Elimination {
    pub y0: Vec<f64>,
    /// Moment position of each free variable `z_j`.
    pub free: Vec<usize>,
    /// Row `N_m` of every moment position as `(j, coef)`.
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl Elimination {
    /// Renumbers the free variables so that new variable `i` is old variable `order[i]`.
    fn permute(&mut self, order: &[usize]) {
        let mut new_of = vec![0; order.len()];
        for (i, &o) in order.iter().enumerate() {
            new_of[o] = i;
        }
        self.free = order.iter().map(|&o| self.free[o]).collect();
        for row in &mut self.rows {
            for t in row.iter_mut() {
                t.0 = new_of[t.0];
            }
            row.sort_by_key(|t| t.0);
        }
    }

    pub fn expand(&self, z: &[f64]) -> Vec<f64> {
        self.y0
            .iter()
            .zip(&self.rows)
            .map(|(y0, row)| y0 + row.iter().map(|&(j, c)| c * z[j]).sum::<f64>())
            .collect()
    }
}

/// Affine parametrization of the columns processed so far.
struct Params {
    y0: Vec<f64>,
    n: Vec<BTreeMap<usize, f64>>,
    /// Moment position of each free variable.
    zpos: Vec<usize>,
    alive: Vec<bool>,
    occ: HashMap<usize, Vec<usize>>,
}

impl Params {
    fn new_free(&mut self, pos: usize) -> usize {
        let z = self.zpos.len();
        self.zpos.push(pos);
        self.alive.push(true);
        self.n[pos] = BTreeMap::from([(z, 1.0)]);
        self.occ.entry(z).or_default().push(pos);
        z
    }

    fn set(&mut self, pos: usize, y0: f64, terms: Vec<(usize, f64)>) {
        self.y0[pos] = y0;
        for &(z, _) in &terms {
            self.occ.entry(z).or_default().push(pos);
        }
        self.n[pos] = terms.into_iter().collect();
    }

    /// Replaces `z` by `x0 + Σ c_k z_k` wherever it occurs.
    fn substitute(&mut self, z: usize, x0: f64, terms: &[(usize, f64)]) {
        self.alive[z] = false;
        for pos in self.occ.remove(&z).unwrap_or_default() {
            let Some(w) = self.n[pos].remove(&z) else { continue };
            self.y0[pos] += w * x0;
            for &(k, c) in terms {
                let e = self.n[pos].entry(k).or_insert_with(|| {
                    self.occ.entry(k).or_default().push(pos);
                    0.0
                });
                *e += w * c;
            }
            self.n[pos].retain(|_, v| v.abs() > BACK_DROP);
        }
    }
}

/// Solution set of the equality rows as `y = y0 + N z`, treating all columns as one group.
pub fn eliminate(n: usize, rows: &[(Vec<(usize, f64)>, f64)]) -> Result<Elimination, MomentError> {
    eliminate_grouped(n, rows, &vec![0; n], &vec![false; n])
}

/// Solution set of the equality rows as `y = y0 + N z`. Column `c` belongs to group
/// `owner[c]`; `shared[c]` marks columns that later groups also use.
pub fn eliminate_grouped(
    n: usize,
    rows: &[(Vec<(usize, f64)>, f64)],
    owner: &[usize],
    shared: &[bool],
) -> Result<Elimination, MomentError> {
    let groups = owner.iter().copied().max().map_or(0, |g| g + 1);
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); groups];
    for (c, &g) in owner.iter().enumerate() {
        cols[g].push(c);
    }
    let mut rows_of: Vec<Vec<usize>> = vec![Vec::new(); groups];
    for (i, (terms, rhs)) in rows.iter().enumerate() {
        match terms.iter().map(|&(c, _)| owner[c]).max() {
            Some(g) => rows_of[g].push(i),
            None if rhs.abs() > RHS_TOL => {
                return Err(MomentError::Infeasible(format!("empty equality with value {rhs:e}")))
            }
            None => {}
        }
    }

    let mut par = Params {
        y0: vec![0.0; n],
        n: vec![BTreeMap::new(); n],
        zpos: Vec::new(),
        alive: Vec::new(),
        occ: HashMap::new(),
    };
    for g in 0..groups {
        reduce_group(g, &cols[g], &rows_of[g], rows, owner, shared, &mut par)?;
    }

    let mut id = vec![usize::MAX; par.zpos.len()];
    let mut free = Vec::new();
    for (z, &pos) in par.zpos.iter().enumerate() {
        if par.alive[z] {
            id[z] = free.len();
            free.push(pos);
        }
    }
    let out = par
        .n
        .iter()
        .map(|row| row.iter().map(|(&z, &c)| (id[z], c)).collect())
        .collect();
    Ok(Elimination { y0: par.y0, free, rows: out })
}

fn reduce_group(
    g: usize,
    new_cols: &[usize],
    row_ids: &[usize],
    rows: &[(Vec<(usize, f64)>, f64)],
    owner: &[usize],
    shared: &[bool],
    par: &mut Params,
) -> Result<(), MomentError> {
    // local unknowns: private columns, shared columns, then earlier free variables
    let mut local: Vec<(bool, usize)> = Vec::new();
    let mut class_end = [0usize; 3];
    for want_shared in [false, true] {
        local.extend(new_cols.iter().filter(|&&c| shared[c] == want_shared).map(|&c| (true, c)));
        class_end[want_shared as usize] = local.len();
    }
    let mut touched: Vec<usize> = Vec::new();
    for &i in row_ids {
        for &(c, _) in &rows[i].0 {
            if owner[c] < g {
                touched.extend(par.n[c].keys());
            }
        }
    }
    touched.sort_unstable();
    touched.dedup();
    local.extend(touched.iter().map(|&z| (false, z)));
    class_end[2] = local.len();
    let col_of: HashMap<(bool, usize), usize> = local.iter().enumerate().map(|(i, &k)| (k, i)).collect();

    let r = row_ids.len();
    let w = local.len();
    if r.saturating_mul(w) > MAX_GROUP_ENTRIES {
        return Err(MomentError::TooLarge(format!(
            "clique {g} elimination needs a dense {r}x{w} system"
        )));
    }
    let mut b = DMatrix::<f64>::zeros(r, w);
    let mut rhs = DVector::<f64>::zeros(r);
    for (li, &i) in row_ids.iter().enumerate() {
        rhs[li] = rows[i].1;
        for &(c, v) in &rows[i].0 {
            if owner[c] == g {
                b[(li, col_of[&(true, c)])] += v;
            } else {
                rhs[li] -= v * par.y0[c];
                for (&z, &nz) in &par.n[c] {
                    b[(li, col_of[&(false, z)])] += v * nz;
                }
            }
        }
    }
    let scale = b.amax().max(rhs.amax()).max(f64::MIN_POSITIVE);
    let tol = RANK_TOL * scale;

    // hierarchical rank-revealing reduction
    let mut pivots: Vec<usize> = Vec::new();
    let mut start = 0usize;
    let mut lo = 0usize;
    for &hi in &class_end {
        if hi > lo && start < r {
            let sub = b.view((start, lo), (r - start, hi - lo)).into_owned();
            let qr = sub.col_piv_qr();
            let mut rest = b.view_mut((start, hi), (r - start, w - hi));
            qr.q_tr_mul(&mut rest);
            let mut rr = rhs.rows_mut(start, r - start);
            qr.q_tr_mul(&mut rr);
            let rmat = qr.r();
            let mut perm = DMatrix::from_fn(1, hi - lo, |_, j| j as f64);
            qr.p().permute_columns(&mut perm);
            let rank = (0..rmat.nrows())
                .take_while(|&i| rmat[(i, i)].abs() > tol)
                .count();
            let mut block = b.view_mut((start, lo), (r - start, hi - lo));
            block.fill(0.0);
            for i in 0..rank {
                for j in i..hi - lo {
                    block[(i, perm[(0, j)] as usize)] = rmat[(i, j)];
                }
                pivots.push(lo + perm[(0, i)] as usize);
            }
            start += rank;
        }
        lo = hi;
    }
    for i in start..r {
        if rhs[i].abs() > RHS_TOL * (1.0 + scale) {
            return Err(MomentError::Infeasible(format!(
                "moment equalities are inconsistent (residual {:e})",
                rhs[i]
            )));
        }
    }

    let is_pivot: Vec<bool> = {
        let mut v = vec![false; w];
        pivots.iter().for_each(|&p| v[p] = true);
        v
    };
    let phi: Vec<usize> = (0..w).filter(|&j| !is_pivot[j]).collect();
    let np = pivots.len();
    let mut tri = DMatrix::<f64>::zeros(np, np);
    let mut sys = DMatrix::<f64>::zeros(np, 1 + phi.len());
    for i in 0..np {
        for j in i..np {
            tri[(i, j)] = b[(i, pivots[j])];
        }
        sys[(i, 0)] = rhs[i];
        for (k, &c) in phi.iter().enumerate() {
            sys[(i, 1 + k)] = b[(i, c)];
        }
    }
    let x = tri
        .solve_upper_triangular(&sys)
        .expect("pivots are above the rank tolerance");

    // free columns keep or receive a variable
    let mut zid = vec![usize::MAX; w];
    for &j in &phi {
        zid[j] = match local[j] {
            (true, c) => par.new_free(c),
            (false, z) => z,
        };
    }
    let expr = |i: usize| -> Vec<(usize, f64)> {
        phi.iter()
            .enumerate()
            .map(|(k, &j)| (zid[j], -x[(i, 1 + k)]))
            .filter(|t| t.1.abs() > BACK_DROP)
            .collect()
    };
    for (i, &p) in pivots.iter().enumerate() {
        match local[p] {
            (true, c) => par.set(c, x[(i, 0)], expr(i)),
            (false, z) => par.substitute(z, x[(i, 0)], &expr(i)),
        }
    }
    Ok(())
}

/// Where a moment block ended up in the conic program: PSD block index, or a diagonal block
/// index and the entry offset for `1×1` blocks. `rows` lists the rows of the moment block
/// that were kept; the others span a null space shared by every feasible moment vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSlot {
    pub block: usize,
    pub offset: usize,
    pub rows: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentProgram {
    pub conic: ConicSdp,
    pub elim: Elimination,
    /// `f·y0`; the relaxation value is `offset − bᵀz`.
    pub offset: f64,
    /// One entry per moment block; `None` when the block is identically zero.
    pub slots: Vec<Option<BlockSlot>>,
}

impl MomentProgram {
    /// Relaxation value for a dual objective `bᵀz`.
    pub fn relaxation_value(&self, dual_obj: f64) -> f64 {
        self.offset - dual_obj
    }
}

pub fn to_conic(sdp: &MomentSdp) -> Result<MomentProgram, MomentError> {
    let n = sdp.index.len();
    let rows: Vec<(Vec<(usize, f64)>, f64)> = sdp
        .equalities
        .iter()
        .map(|r| (r.terms.clone(), r.rhs))
        .collect();
    let owner: Vec<usize> = (0..n).map(|p| sdp.index.owner(p)).collect();
    let mut shared = vec![false; n];
    for k in 1..sdp.index.cliques().len() {
        for (_, p) in sdp.index.aliases(k) {
            shared[p] = true;
        }
    }
    let mut elim = eliminate_grouped(n, &rows, &owner, &shared)?;
    // Order free variables by the last clique they touch so that the Schur complement has
    // a narrow envelope along the clique chain.
    let mut last = vec![0usize; elim.free.len()];
    for b in &sdp.blocks {
        let k = b.clique();
        for e in &b.entries {
            for &(j, _) in &elim.rows[e.moment as usize] {
                last[j] = last[j].max(k);
            }
        }
    }
    let mut order: Vec<usize> = (0..elim.free.len()).collect();
    order.sort_by_key(|&j| (last[j], j));
    elim.permute(&order);

    let kept: Vec<Vec<usize>> = sdp.blocks.iter().map(|b| facial_rows(b, &elim)).collect();
    let mut specs = Vec::new();
    let mut slots = Vec::with_capacity(sdp.blocks.len());
    let scalars = kept.iter().filter(|k| k.len() == 1).count();
    let psd = kept.iter().filter(|k| k.len() > 1).count();
    let mut next_scalar = 0;
    for rows in kept {
        slots.push(match rows.len() {
            0 => None,
            1 => {
                next_scalar += 1;
                Some(BlockSlot { block: psd, offset: next_scalar - 1, rows })
            }
            k => {
                specs.push(BlockSpec { size: k, kind: BlockKind::Psd });
                Some(BlockSlot { block: specs.len() - 1, offset: 0, rows })
            }
        });
    }
    if scalars > 0 {
        specs.push(BlockSpec { size: scalars, kind: BlockKind::Diag });
    }

    let m = elim.free.len();
    let mut c_trip: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); specs.len()];
    let mut a_trip: Vec<Vec<(u32, u32, u32, f64)>> = vec![Vec::new(); m];
    for (b, slot) in sdp.blocks.iter().zip(&slots) {
        let Some(slot) = slot else { continue };
        let mut local = vec![usize::MAX; b.size];
        for (i, &r) in slot.rows.iter().enumerate() {
            local[r] = i;
        }
        for e in &b.entries {
            let (r, c) = (local[e.row as usize], local[e.col as usize]);
            if r == usize::MAX || c == usize::MAX {
                continue;
            }
            let (r, c) = (r + slot.offset, c + slot.offset);
            let mpos = e.moment as usize;
            let y0 = elim.y0[mpos];
            if y0 != 0.0 {
                c_trip[slot.block].push((r, c, e.coef * y0));
            }
            for &(j, nv) in &elim.rows[mpos] {
                a_trip[j].push((slot.block as u32, r as u32, c as u32, -e.coef * nv));
            }
        }
    }

    let mut conic = ConicSdp::new(specs);
    conic.c = c_trip.into_iter().map(|t| SparseSym::from_triplets(t).pruned(BACK_DROP)).collect();
    let mut fdense = vec![0.0; n];
    for &(p, c) in &sdp.objective {
        fdense[p] += c;
    }
    let mut bvec = vec![0.0; m];
    let mut offset = 0.0;
    for (mpos, &f) in fdense.iter().enumerate() {
        if f == 0.0 {
            continue;
        }
        offset += f * elim.y0[mpos];
        for &(j, nv) in &elim.rows[mpos] {
            bvec[j] -= f * nv;
        }
    }
    for (j, mut t) in a_trip.into_iter().enumerate() {
        t.sort_by_key(|e| e.0);
        let mut parts = Vec::new();
        let mut start = 0;
        while start < t.len() {
            let blk = t[start].0;
            let end = start + t[start..].iter().take_while(|e| e.0 == blk).count();
            let mat = SparseSym::from_triplets(
                t[start..end].iter().map(|e| (e.1 as usize, e.2 as usize, e.3)),
            )
            .pruned(BACK_DROP);
            parts.push((blk as usize, mat));
            start = end;
        }
        conic.add_constraint(parts, bvec[j]);
    }
    Ok(MomentProgram { conic, elim, offset, slots })
}

/// Singular values below this fraction of the largest mark a shared null direction.
const NULL_TOL: f64 = 1e-9;
/// Facial reduction is skipped for blocks whose stacked data would exceed this many entries.
const MAX_FACIAL_WORK: usize = 2_000_000_000;

/// Rows of a moment block to keep. Every feasible `y = y0 + N z` gives a block
/// `B(y0) + Σ z_j B(N_j)`; vectors annihilated by all of these lie in the kernel of every
/// feasible block, so the block is PSD iff its principal submatrix on a complement is.
/// The complement is chosen as a set of rows by pivoted QR on the null-space basis.
fn facial_rows(block: &MomentBlock, elim: &Elimination) -> Vec<usize> {
    let s = block.size;
    let mut parts: BTreeMap<usize, DMatrix<f64>> = BTreeMap::new();
    let mut put = |key: usize, r: usize, c: usize, v: f64| {
        let m = parts.entry(key).or_insert_with(|| DMatrix::zeros(s, s));
        m[(r, c)] += v;
        if r != c {
            m[(c, r)] += v;
        }
    };
    for e in &block.entries {
        let (r, c, m) = (e.row as usize, e.col as usize, e.moment as usize);
        if elim.y0[m] != 0.0 {
            put(usize::MAX, r, c, e.coef * elim.y0[m]);
        }
        for &(j, nv) in &elim.rows[m] {
            put(j, r, c, e.coef * nv);
        }
    }
    if parts.len().saturating_mul(s * s * s) > MAX_FACIAL_WORK {
        return (0..s).collect();
    }
    // R factor of the stacked data, accumulated in batches
    let batch = 4;
    let mut r = DMatrix::<f64>::zeros(0, s);
    let mats: Vec<DMatrix<f64>> = parts.into_values().collect();
    for chunk in mats.chunks(batch) {
        let rows = r.nrows() + chunk.len() * s;
        let mut stack = DMatrix::<f64>::zeros(rows, s);
        stack.view_mut((0, 0), (r.nrows(), s)).copy_from(&r);
        for (i, m) in chunk.iter().enumerate() {
            stack.view_mut((r.nrows() + i * s, 0), (s, s)).copy_from(m);
        }
        r = stack.qr().r();
    }
    if r.nrows() < s {
        let mut padded = DMatrix::<f64>::zeros(s, s);
        padded.view_mut((0, 0), (r.nrows(), s)).copy_from(&r);
        r = padded;
    }
    let svd = r.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return Vec::new();
    }
    let null: Vec<usize> = (0..s)
        .filter(|&i| svd.singular_values[i] <= NULL_TOL * smax)
        .collect();
    let mut drop = vec![false; s];
    if !null.is_empty() {
        let mut kt = DMatrix::<f64>::zeros(null.len(), s);
        for (i, &k) in null.iter().enumerate() {
            kt.row_mut(i).copy_from(&vt.row(k));
        }
        let qr = kt.col_piv_qr();
        let mut perm = DMatrix::from_fn(1, s, |_, j| j as f64);
        qr.p().permute_columns(&mut perm);
        for i in 0..null.len() {
            drop[perm[(0, i)] as usize] = true;
        }
    }
    (0..s).filter(|&i| !drop[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eliminates_dependent_rows() {
        // y0 = 1, y1 + y2 = 1, 2y1 + 2y2 = 2, y2 - y3 = 0
        let rows = vec![
            (vec![(0, 1.0)], 1.0),
            (vec![(1, 1.0), (2, 1.0)], 1.0),
            (vec![(1, 2.0), (2, 2.0)], 2.0),
            (vec![(2, 1.0), (3, -1.0)], 0.0),
        ];
        let e = eliminate(4, &rows).unwrap();
        assert_eq!(e.free.len(), 1);
        for z in [-1.0, 0.3, 2.0] {
            let y = e.expand(&[z]);
            assert!((y[0] - 1.0).abs() < 1e-15);
            assert!((y[1] + y[2] - 1.0).abs() < 1e-15);
            assert!((y[2] - y[3]).abs() < 1e-15);
        }
    }

    #[test]
    fn inconsistent_rows() {
        let rows = vec![(vec![(0, 1.0), (1, 1.0)], 1.0), (vec![(0, 1.0), (1, 1.0)], 2.0)];
        assert!(matches!(eliminate(2, &rows), Err(MomentError::Infeasible(_))));
    }
}
