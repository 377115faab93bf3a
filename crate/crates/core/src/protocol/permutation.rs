use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::qcore::{pt_spectrum, DensityMatrix};

/// Largest `m (n_a + n_b)` handled by the brute-force routines.
pub const MAX_COPY_QUBITS: usize = 12;

/// Which half of each copy a swap acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Permutation of copy labels `0..m`; `sigma[c]` is where copy `c` is sent.
pub type CopyPermutation = Vec<usize>;

/// One term `w · P_{σ_A} ⊗ P_{σ_B}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PermTerm {
    pub weight: f64,
    pub sigma_a: CopyPermutation,
    pub sigma_b: CopyPermutation,
}

/// Real linear combination of copy permutations acting independently on the
/// A and B registers of `m` copies of an `(n_a + n_b)`-qubit system.
///
/// `P_σ` maps `|x_0, …, x_{m-1}⟩` to the state with `x_c` in slot `σ(c)`, so
/// `P_σ P_τ = P_{σ∘τ}` and `P_σ^† = P_σ^T = P_{σ^{-1}}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PermutationOperator {
    order: usize,
    n_a: usize,
    n_b: usize,
    transposed: bool,
    terms: Vec<PermTerm>,
}

fn identity(m: usize) -> CopyPermutation {
    (0..m).collect()
}

fn transposition(m: usize, c: usize, d: usize) -> CopyPermutation {
    let mut p = identity(m);
    p.swap(c, d);
    p
}

/// `σ ∘ τ`.
fn compose(sigma: &[usize], tau: &[usize]) -> CopyPermutation {
    tau.iter().map(|&t| sigma[t]).collect()
}

fn inverse(sigma: &[usize]) -> CopyPermutation {
    let mut inv = vec![0; sigma.len()];
    for (c, &s) in sigma.iter().enumerate() {
        inv[s] = c;
    }
    inv
}

fn check_size(m: usize, n_a: usize, n_b: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::input(format!("at least two copies are needed, got {m}")));
    }
    if n_a == 0 || n_b == 0 {
        return Err(Error::input("both subsystems need at least one qubit"));
    }
    if m * (n_a + n_b) > MAX_COPY_QUBITS {
        return Err(Error::size(format!(
            "{m} copies of {} qubits exceed the brute-force cap of {MAX_COPY_QUBITS}",
            n_a + n_b
        )));
    }
    Ok(())
}

impl PermutationOperator {
    fn single(order: usize, n_a: usize, n_b: usize, sigma_a: CopyPermutation, sigma_b: CopyPermutation) -> Self {
        PermutationOperator { order, n_a, n_b, transposed: false, terms: vec![PermTerm { weight: 1.0, sigma_a, sigma_b }] }
    }

    pub fn identity(m: usize, n_a: usize, n_b: usize) -> Result<Self> {
        check_size(m, n_a, n_b)?;
        Ok(Self::single(m, n_a, n_b, identity(m), identity(m)))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    /// Whether this is the B-partial transpose of a multi-copy operator.
    pub fn is_transposed(&self) -> bool {
        self.transposed
    }

    pub fn terms(&self) -> &[PermTerm] {
        &self.terms
    }

    /// Operator product `self · other`.
    pub fn mul(&self, other: &PermutationOperator) -> PermutationOperator {
        assert_eq!((self.order, self.n_a, self.n_b), (other.order, other.n_a, other.n_b), "operators act on different spaces");
        let terms = self
            .terms
            .iter()
            .flat_map(|s| {
                other.terms.iter().map(move |o| PermTerm {
                    weight: s.weight * o.weight,
                    sigma_a: compose(&s.sigma_a, &o.sigma_a),
                    sigma_b: compose(&s.sigma_b, &o.sigma_b),
                })
            })
            .collect();
        PermutationOperator { transposed: self.transposed || other.transposed, terms, ..*self }.merged()
    }

    pub fn adjoint(&self) -> PermutationOperator {
        let terms = self
            .terms
            .iter()
            .map(|t| PermTerm { weight: t.weight, sigma_a: inverse(&t.sigma_a), sigma_b: inverse(&t.sigma_b) })
            .collect();
        PermutationOperator { terms, ..self.clone() }
    }

    /// `(self + other) · scale`.
    fn add_scaled(&self, other: &PermutationOperator, scale: f64) -> PermutationOperator {
        let terms = self
            .terms
            .iter()
            .chain(&other.terms)
            .map(|t| PermTerm { weight: t.weight * scale, ..t.clone() })
            .collect();
        PermutationOperator { terms, ..self.clone() }.merged()
    }

    /// Symbolic transpose of every B register: `P_σ^T = P_{σ^{-1}}`.
    pub fn partial_transpose(&self) -> PermutationOperator {
        let terms = self
            .terms
            .iter()
            .map(|t| PermTerm { weight: t.weight, sigma_a: t.sigma_a.clone(), sigma_b: inverse(&t.sigma_b) })
            .collect();
        PermutationOperator { transposed: !self.transposed, terms, ..self.clone() }
    }

    /// Collapse repeated permutation pairs and drop cancelled terms.
    fn merged(self) -> PermutationOperator {
        let mut acc: BTreeMap<(CopyPermutation, CopyPermutation), f64> = BTreeMap::new();
        for t in self.terms {
            *acc.entry((t.sigma_a, t.sigma_b)).or_insert(0.0) += t.weight;
        }
        let terms = acc
            .into_iter()
            .filter(|(_, w)| *w != 0.0)
            .map(|((sigma_a, sigma_b), weight)| PermTerm { weight, sigma_a, sigma_b })
            .collect();
        PermutationOperator { terms, ..self }
    }

    /// Perturb the first term's weight. Used to check that verification
    /// reports a corrupted operator.
    pub fn corrupted(&self, delta: f64) -> PermutationOperator {
        let mut out = self.clone();
        if let Some(t) = out.terms.first_mut() {
            t.weight += delta;
        }
        out
    }

    fn register_bits(&self) -> usize {
        self.n_a + self.n_b
    }

    /// Image of basis configuration `x` (one register index per copy).
    fn apply_term(&self, term: &PermTerm, x: &[usize], y: &mut [usize]) {
        let db = 1usize << self.n_b;
        y.fill(0);
        for (c, &xc) in x.iter().enumerate() {
            let (a, b) = (xc / db, xc % db);
            y[term.sigma_a[c]] += a * db;
            y[term.sigma_b[c]] += b;
        }
    }

    /// Dense matrix on the `m`-copy register, copy 0 most significant.
    pub fn to_dense(&self) -> Result<CMatrix> {
        check_size(self.order, self.n_a, self.n_b)?;
        let d = 1usize << self.register_bits();
        let dim = d.pow(self.order as u32);
        let mut out = CMatrix::zeros(dim, dim);
        let mut x = vec![0; self.order];
        let mut y = vec![0; self.order];
        for col in 0..dim {
            split_index(col, d, &mut x);
            for term in &self.terms {
                self.apply_term(term, &x, &mut y);
                out[(join_index(&y, d), col)] += C64::new(term.weight, 0.0);
            }
        }
        Ok(out)
    }

    /// `Tr[ρ^{⊗m} · self]` by summing `ρ^{⊗m}_{x, π(x)}` over all configurations.
    pub fn expectation(&self, rho: &DensityMatrix) -> Result<C64> {
        if (rho.n_a(), rho.n_b()) != (self.n_a, self.n_b) {
            return Err(Error::input(format!(
                "operator split ({}, {}) does not match state split ({}, {})",
                self.n_a,
                self.n_b,
                rho.n_a(),
                rho.n_b()
            )));
        }
        check_size(self.order, self.n_a, self.n_b)?;
        let r = rho.matrix();
        let d = 1usize << self.register_bits();
        let dim = d.pow(self.order as u32);
        let mut x = vec![0; self.order];
        let mut y = vec![0; self.order];
        let mut total = C64::new(0.0, 0.0);
        for term in &self.terms {
            let mut acc = C64::new(0.0, 0.0);
            for idx in 0..dim {
                split_index(idx, d, &mut x);
                self.apply_term(term, &x, &mut y);
                acc += x.iter().zip(&y).map(|(&xc, &yc)| r[(xc, yc)]).product::<C64>();
            }
            total += acc * term.weight;
        }
        Ok(total)
    }
}

fn split_index(mut idx: usize, d: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = idx % d;
        idx /= d;
    }
}

fn join_index(digits: &[usize], d: usize) -> usize {
    digits.iter().fold(0, |acc, &x| acc * d + x)
}

/// `S_X^{c,d}` on `m` copies: exchanges the X registers of copies `c`, `d`.
pub fn build_swap(c: usize, d: usize, subsystem: Subsystem, m: usize, n_a: usize, n_b: usize) -> Result<PermutationOperator> {
    check_size(m, n_a, n_b)?;
    if c == d || c >= m || d >= m {
        return Err(Error::input(format!("invalid copy pair ({c}, {d}) for {m} copies")));
    }
    let t = transposition(m, c, d);
    Ok(match subsystem {
        Subsystem::A => PermutationOperator::single(m, n_a, n_b, t, identity(m)),
        Subsystem::B => PermutationOperator::single(m, n_a, n_b, identity(m), t),
    })
}

/// `(ℙ^m)^{T_B}` from the recursion
/// `(ℙ^m)^{T_B} = (S_A^{m,m-1} (ℙ^{m-1})^{T_B} S_B^{m,m-1} + h.c.)/2`,
/// starting at `(ℙ^2)^{T_B} = S_A^{1,2} S_B^{1,2}`.
pub fn build_pt_permutation(m: usize, n_a: usize, n_b: usize) -> Result<PermutationOperator> {
    check_size(m, n_a, n_b)?;
    let mut op = build_swap(0, 1, Subsystem::A, m, n_a, n_b)?.mul(&build_swap(0, 1, Subsystem::B, m, n_a, n_b)?);
    for k in 3..=m {
        let sa = build_swap(k - 1, k - 2, Subsystem::A, m, n_a, n_b)?;
        let sb = build_swap(k - 1, k - 2, Subsystem::B, m, n_a, n_b)?;
        let x = sa.mul(&op).mul(&sb);
        op = x.add_scaled(&x.adjoint(), 0.5);
    }
    op.transposed = true;
    Ok(op)
}

/// `ℙ^m` itself from `ℙ^m = (S_A^{m,m-1} S_B^{m,m-1} ℙ^{m-1} + h.c.)/2`.
pub fn build_permutation(m: usize, n_a: usize, n_b: usize) -> Result<PermutationOperator> {
    check_size(m, n_a, n_b)?;
    let full_swap = |c, d| -> Result<PermutationOperator> {
        Ok(build_swap(c, d, Subsystem::A, m, n_a, n_b)?.mul(&build_swap(c, d, Subsystem::B, m, n_a, n_b)?))
    };
    let mut op = full_swap(0, 1)?;
    for k in 3..=m {
        let x = full_swap(k - 1, k - 2)?.mul(&op);
        op = x.add_scaled(&x.adjoint(), 0.5);
    }
    Ok(op)
}

/// Transpose the B register of every copy of a dense `m`-copy operator.
pub fn partial_transpose_copies(op: &CMatrix, m: usize, n_a: usize, n_b: usize) -> Result<CMatrix> {
    check_size(m, n_a, n_b)?;
    let db = 1usize << n_b;
    let d = 1usize << (n_a + n_b);
    let dim = d.pow(m as u32);
    if op.shape() != (dim, dim) {
        return Err(Error::Shape { expected: dim, got: op.nrows() });
    }
    let mut r = vec![0; m];
    let mut c = vec![0; m];
    Ok(CMatrix::from_fn(dim, dim, |row, col| {
        split_index(row, d, &mut r);
        split_index(col, d, &mut c);
        for k in 0..m {
            let (ra, rb) = (r[k] / db, r[k] % db);
            let (ca, cb) = (c[k] / db, c[k] % db);
            r[k] = ra * db + cb;
            c[k] = ca * db + rb;
        }
        op[(join_index(&r, d), join_index(&c, d))]
    }))
}

/// `|Tr[ρ^{⊗m} (ℙ^m)^{T_B}] − μ_m|` with `μ_m` from the partial-transpose
/// spectrum.
pub fn verify_moment_identity(rho: &DensityMatrix, m: usize) -> Result<f64> {
    let op = build_pt_permutation(m, rho.n_a(), rho.n_b())?;
    verify_with_operator(rho, &op)
}

/// Same check against a caller-supplied operator.
pub fn verify_with_operator(rho: &DensityMatrix, op: &PermutationOperator) -> Result<f64> {
    let value = op.expectation(rho)?;
    let exact = pt_spectrum(rho)?.power_sum(op.order());
    Ok((value - C64::new(exact, 0.0)).norm())
}
