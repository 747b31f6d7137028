use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::error::DaError;
use super::poly::TruncatedPoly;

/// Exponent vector of one monomial, one entry per independent variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Box<[u8]>);

impl MultiIndex {
    pub fn new(exponents: &[u8]) -> Self {
        MultiIndex(exponents.into())
    }

    pub fn exponents(&self) -> &[u8] {
        &self.0
    }

    /// Total degree (sum of exponents).
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }
}

/// Precomputed multiplication table in compressed form: for each result
/// monomial k, `pairs[starts[k]..starts[k + 1]]` lists the factor index
/// pairs `(i, j)` with `monomial_i * monomial_j = monomial_k`.
#[derive(Debug, Clone, Default)]
pub(crate) struct MulTable {
    pub starts: Vec<u32>,
    pub pairs: Vec<(u32, u32)>,
}

/// Shared description of a truncated polynomial algebra: the number of
/// perturbation variables, the truncation order, and the derived monomial
/// tables. Immutable after creation; polynomials from different contexts
/// never mix.
pub struct DaContext {
    num_vars: usize,
    order: usize,
    /// All monomials with total degree <= order, graded lexicographic.
    monomials: Vec<MultiIndex>,
    degree: Vec<u8>,
    index_of: HashMap<MultiIndex, usize>,
    /// Start of each degree block in `monomials` (len order + 2).
    degree_start: Vec<usize>,
    /// Monomial index of each first-degree variable.
    var_monomial: Vec<usize>,
    /// Monomial index of `x_i * x_j` for i <= j, flattened.
    pair_monomial: Vec<usize>,
    /// For each monomial of degree >= 1 (offset by 1): a lower-degree parent
    /// and the variable whose exponent was decremented.
    parent: Vec<(u32, u32)>,
    mul_table: MulTable,
}

impl std::fmt::Debug for DaContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DaContext")
            .field("num_vars", &self.num_vars)
            .field("order", &self.order)
            .field("monomials", &self.monomials.len())
            .finish()
    }
}

fn enumerate_monomials(num_vars: usize, order: usize) -> Vec<MultiIndex> {
    fn fill(out: &mut Vec<MultiIndex>, cur: &mut [u8], var: usize, remaining: usize) {
        if var + 1 == cur.len() {
            cur[var] = remaining as u8;
            out.push(MultiIndex::new(cur));
            cur[var] = 0;
            return;
        }
        for e in (0..=remaining).rev() {
            cur[var] = e as u8;
            fill(out, cur, var + 1, remaining - e);
        }
        cur[var] = 0;
    }

    let mut out = Vec::new();
    let mut cur = vec![0u8; num_vars];
    for deg in 0..=order {
        fill(&mut out, &mut cur, 0, deg);
    }
    out
}

impl DaContext {
    /// Builds a fresh algebra with `num_vars` perturbation variables
    /// truncated at total degree `order`.
    pub fn new(num_vars: usize, order: usize) -> Result<Arc<DaContext>, DaError> {
        if num_vars == 0 {
            return Err(DaError::InvalidArgument(
                "num_vars must be at least 1".into(),
            ));
        }
        if order < 2 {
            return Err(DaError::OrderTooLow { order, needed: 2 });
        }
        let monomials = enumerate_monomials(num_vars, order);
        if monomials.len() > 20_000 {
            return Err(DaError::InvalidArgument(format!(
                "algebra too large: {} monomials for {num_vars} vars at order {order}",
                monomials.len()
            )));
        }

        let degree: Vec<u8> = monomials.iter().map(|m| m.degree() as u8).collect();
        let mut index_of = HashMap::with_capacity(monomials.len());
        for (i, m) in monomials.iter().enumerate() {
            index_of.insert(m.clone(), i);
        }

        let mut degree_start = vec![monomials.len(); order + 2];
        for (i, &d) in degree.iter().enumerate() {
            let d = d as usize;
            if degree_start[d] > i {
                degree_start[d] = i;
            }
        }
        degree_start[order + 1] = monomials.len();

        let mut var_monomial = vec![0usize; num_vars];
        for v in 0..num_vars {
            let mut e = vec![0u8; num_vars];
            e[v] = 1;
            var_monomial[v] = index_of[&MultiIndex::new(&e)];
        }

        let mut pair_monomial = vec![0usize; num_vars * num_vars];
        for i in 0..num_vars {
            for j in i..num_vars {
                let mut e = vec![0u8; num_vars];
                e[i] += 1;
                e[j] += 1;
                let idx = index_of[&MultiIndex::new(&e)];
                pair_monomial[i * num_vars + j] = idx;
                pair_monomial[j * num_vars + i] = idx;
            }
        }

        let mut parent = Vec::with_capacity(monomials.len() - 1);
        for m in &monomials[1..] {
            let var = m.0.iter().position(|&e| e > 0).expect("degree >= 1");
            let mut e = m.0.to_vec();
            e[var] -= 1;
            let p = index_of[&MultiIndex::new(&e)];
            parent.push((p as u32, var as u32));
        }

        let mut triples = Vec::new();
        for (i, mi) in monomials.iter().enumerate() {
            let di = degree[i] as usize;
            for (j, mj) in monomials.iter().enumerate() {
                if di + degree[j] as usize > order {
                    continue;
                }
                let prod: Vec<u8> = mi.0.iter().zip(mj.0.iter()).map(|(a, b)| a + b).collect();
                let k = index_of[&MultiIndex::new(&prod)];
                triples.push((k as u32, i as u32, j as u32));
            }
        }
        triples.sort_unstable();
        let mut mul_table = MulTable {
            starts: Vec::with_capacity(monomials.len() + 1),
            pairs: Vec::with_capacity(triples.len()),
        };
        let mut next = 0u32;
        for &(k, i, j) in &triples {
            while next <= k {
                mul_table.starts.push(mul_table.pairs.len() as u32);
                next += 1;
            }
            mul_table.pairs.push((i, j));
        }
        while (next as usize) <= monomials.len() {
            mul_table.starts.push(mul_table.pairs.len() as u32);
            next += 1;
        }

        Ok(Arc::new(DaContext {
            num_vars,
            order,
            monomials,
            degree,
            index_of,
            degree_start,
            var_monomial,
            pair_monomial,
            parent,
            mul_table,
        }))
    }

    /// Returns a process-wide cached context for `(num_vars, order)`.
    pub fn shared(num_vars: usize, order: usize) -> Result<Arc<DaContext>, DaError> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<DaContext>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("context cache poisoned");
        if let Some(ctx) = guard.get(&(num_vars, order)) {
            return Ok(ctx.clone());
        }
        let ctx = DaContext::new(num_vars, order)?;
        guard.insert((num_vars, order), ctx.clone());
        Ok(ctx)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of monomials (coefficient slots) in the algebra.
    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn monomial(&self, index: usize) -> &MultiIndex {
        &self.monomials[index]
    }

    pub fn monomial_degree(&self, index: usize) -> usize {
        self.degree[index] as usize
    }

    pub fn monomial_index(&self, mi: &MultiIndex) -> Option<usize> {
        self.index_of.get(mi).copied()
    }

    pub(crate) fn degree_range(&self, degree: usize) -> std::ops::Range<usize> {
        self.degree_start[degree]..self.degree_start[degree + 1]
    }

    pub(crate) fn var_monomial(&self, var: usize) -> usize {
        self.var_monomial[var]
    }

    pub(crate) fn pair_monomial(&self, i: usize, j: usize) -> usize {
        self.pair_monomial[i * self.num_vars + j]
    }

    pub(crate) fn parent_of(&self, monomial: usize) -> (usize, usize) {
        let (p, v) = self.parent[monomial - 1];
        (p as usize, v as usize)
    }

    pub(crate) fn mul_table(&self) -> &MulTable {
        &self.mul_table
    }

    pub(crate) fn same_algebra(&self, other: &DaContext) -> bool {
        self.num_vars == other.num_vars && self.order == other.order
    }

    /// Constant polynomial in this algebra.
    pub fn constant(self: &Arc<Self>, value: f64) -> TruncatedPoly {
        TruncatedPoly::constant(self, value)
    }

    /// The polynomial `center + dv_index`: constant part `center`, unit
    /// first-order coefficient on the given variable.
    pub fn variable(self: &Arc<Self>, index: usize, center: f64) -> Result<TruncatedPoly, DaError> {
        if index >= self.num_vars {
            return Err(DaError::IndexOutOfRange {
                index,
                num_vars: self.num_vars,
            });
        }
        let mut p = TruncatedPoly::constant(self, center);
        p.set_coeff_index(self.var_monomial[index], 1.0);
        Ok(p)
    }

    /// The identity inner arguments shifted by `offsets`:
    /// component i is `offsets[i] + dv_i`. Used to re-center expansions by
    /// composition.
    pub fn shifted_variables(
        self: &Arc<Self>,
        offsets: &[f64],
    ) -> Result<Vec<TruncatedPoly>, DaError> {
        if offsets.len() != self.num_vars {
            return Err(DaError::Arity {
                expected: self.num_vars,
                got: offsets.len(),
            });
        }
        offsets
            .iter()
            .enumerate()
            .map(|(i, &c)| self.variable(i, c))
            .collect()
    }
}
