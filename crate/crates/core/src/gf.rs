//! Arithmetic over GF(2^w) for w in {4, 8, 16}, dense symbol matrices,
//! rank by Gaussian elimination and Vandermonde MDS generators.
//!
//! Multiplication goes through log/exp tables built once per [`Field`];
//! the tables are derived from slow carry-less multiplication reduced by the
//! configured polynomial, so any irreducible polynomial works (primitive or
//! not).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combin::{binomial, Combinations};

/// One field element. Wide enough for the largest supported field.
pub type Symbol = u16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("unsupported word size {0} (expected 4, 8 or 16)")]
    UnsupportedWordBits(u32),
    #[error("polynomial {poly:#x} is not an irreducible polynomial of degree {word_bits}")]
    ReduciblePolynomial { poly: u32, word_bits: u32 },
    #[error("symbol {value:#x} is outside GF(2^{word_bits})")]
    ElementOutOfRange { value: Symbol, word_bits: u32 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("field too small: MDS matrix needs {needed} distinct points, field has order {order}")]
    FieldTooSmall { needed: usize, order: usize },
    #[error("invalid MDS shape {k}x{n}: need k <= n")]
    InvalidMdsShape { k: usize, n: usize },
    #[error("exhaustive MDS check would examine {count} submatrices (limit {limit})")]
    CombinatorialLimit { count: u128, limit: u128 },
}

/// Field definition: GF(2^word_bits) modulo `reduction_polynomial`
/// (bit i is the coefficient of x^i, including the leading term).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldConfig {
    pub word_bits: u32,
    pub reduction_polynomial: u32,
}

impl FieldConfig {
    /// x^4 + x + 1
    pub const GF16: FieldConfig = FieldConfig {
        word_bits: 4,
        reduction_polynomial: 0x13,
    };
    /// x^8 + x^4 + x^3 + x^2 + 1
    pub const GF256: FieldConfig = FieldConfig {
        word_bits: 8,
        reduction_polynomial: 0x11d,
    };
    /// x^16 + x^12 + x^3 + x + 1
    pub const GF65536: FieldConfig = FieldConfig {
        word_bits: 16,
        reduction_polynomial: 0x1100b,
    };

    /// Default polynomial for a supported word size.
    pub fn with_word_bits(word_bits: u32) -> Result<Self, GfError> {
        match word_bits {
            4 => Ok(Self::GF16),
            8 => Ok(Self::GF256),
            16 => Ok(Self::GF65536),
            other => Err(GfError::UnsupportedWordBits(other)),
        }
    }

    pub fn order(&self) -> usize {
        1usize << self.word_bits
    }

    /// Checks the word size and that the polynomial is irreducible of the
    /// right degree, by trial division with every polynomial of degree at
    /// most `word_bits / 2`.
    pub fn validate(&self) -> Result<(), GfError> {
        if !matches!(self.word_bits, 4 | 8 | 16) {
            return Err(GfError::UnsupportedWordBits(self.word_bits));
        }
        let reducible = Err(GfError::ReduciblePolynomial {
            poly: self.reduction_polynomial,
            word_bits: self.word_bits,
        });
        if poly_degree(self.reduction_polynomial) != Some(self.word_bits) {
            return reducible;
        }
        for divisor in 2u32..(1 << (self.word_bits / 2 + 1)) {
            if poly_mod(self.reduction_polynomial, divisor) == 0 {
                return reducible;
            }
        }
        Ok(())
    }
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self::GF256
    }
}

fn poly_degree(p: u32) -> Option<u32> {
    if p == 0 {
        None
    } else {
        Some(31 - p.leading_zeros())
    }
}

/// Remainder of GF(2)[x] division.
fn poly_mod(mut a: u32, b: u32) -> u32 {
    let db = poly_degree(b).expect("nonzero divisor");
    while let Some(da) = poly_degree(a) {
        if da < db {
            break;
        }
        a ^= b << (da - db);
    }
    a
}

/// Carry-less multiply followed by reduction.
fn slow_mul(a: u32, b: u32, poly: u32, word_bits: u32) -> u32 {
    let mut acc = 0u32;
    for i in 0..word_bits {
        if (b >> i) & 1 == 1 {
            acc ^= a << i;
        }
    }
    poly_mod(acc, poly)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Mul,
    Inv,
    Div,
}

/// A constructed field with lookup tables.
#[derive(Debug, Clone)]
pub struct Field {
    config: FieldConfig,
    // exp has 2*(q-1) entries so log sums never need a modulo.
    exp: Vec<Symbol>,
    log: Vec<u32>,
}

impl Field {
    pub fn new(config: FieldConfig) -> Result<Self, GfError> {
        config.validate()?;
        let q = config.order() as u32;
        let generator = (2..q)
            .find(|&g| multiplicative_order(g, &config) == q - 1)
            .expect("the multiplicative group of a finite field is cyclic");
        let mut exp = vec![0 as Symbol; 2 * (q as usize - 1)];
        let mut log = vec![0u32; q as usize];
        let mut x = 1u32;
        for i in 0..(q - 1) {
            exp[i as usize] = x as Symbol;
            exp[(i + q - 1) as usize] = x as Symbol;
            log[x as usize] = i;
            x = slow_mul(x, generator, config.reduction_polynomial, config.word_bits);
        }
        Ok(Self { config, exp, log })
    }

    /// GF(2^8) with the default polynomial.
    pub fn gf256() -> Self {
        Self::new(FieldConfig::GF256).expect("builtin polynomial is irreducible")
    }

    pub fn config(&self) -> FieldConfig {
        self.config
    }

    /// Number of elements q.
    pub fn order(&self) -> usize {
        self.config.order()
    }

    pub fn contains(&self, a: Symbol) -> bool {
        (a as usize) < self.order()
    }

    pub fn check(&self, a: Symbol) -> Result<Symbol, GfError> {
        if self.contains(a) {
            Ok(a)
        } else {
            Err(GfError::ElementOutOfRange {
                value: a,
                word_bits: self.config.word_bits,
            })
        }
    }

    #[inline]
    pub fn add(&self, a: Symbol, b: Symbol) -> Symbol {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: Symbol, b: Symbol) -> Symbol {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[(self.log[a as usize] + self.log[b as usize]) as usize]
        }
    }

    pub fn inv(&self, a: Symbol) -> Result<Symbol, GfError> {
        if a == 0 {
            return Err(GfError::DivisionByZero);
        }
        let q1 = self.order() as u32 - 1;
        Ok(self.exp[((q1 - self.log[a as usize]) % q1) as usize])
    }

    pub fn div(&self, a: Symbol, b: Symbol) -> Result<Symbol, GfError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: Symbol, e: u64) -> Symbol {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let q1 = self.order() as u64 - 1;
        self.exp[((self.log[a as usize] as u64 * (e % q1)) % q1) as usize]
    }

    /// Single entry point for the four basic operations; `b` is ignored by `Inv`.
    pub fn apply(&self, op: FieldOp, a: Symbol, b: Symbol) -> Result<Symbol, GfError> {
        self.check(a)?;
        self.check(b)?;
        match op {
            FieldOp::Add => Ok(self.add(a, b)),
            FieldOp::Mul => Ok(self.mul(a, b)),
            FieldOp::Inv => self.inv(a),
            FieldOp::Div => self.div(a, b),
        }
    }

    /// `dst += c * src`, elementwise.
    pub fn mul_add_into(&self, dst: &mut [Symbol], src: &[Symbol], c: Symbol) {
        debug_assert_eq!(dst.len(), src.len());
        if c == 0 {
            return;
        }
        if c == 1 {
            for (d, s) in dst.iter_mut().zip(src) {
                *d ^= *s;
            }
            return;
        }
        let lc = self.log[c as usize];
        for (d, &s) in dst.iter_mut().zip(src) {
            if s != 0 {
                *d ^= self.exp[(self.log[s as usize] + lc) as usize];
            }
        }
    }

    /// `v *= c`, elementwise.
    pub fn scale(&self, v: &mut [Symbol], c: Symbol) {
        for x in v.iter_mut() {
            *x = self.mul(*x, c);
        }
    }

    pub fn validate_matrix(&self, m: &SymbolMatrix) -> Result<(), GfError> {
        m.entries.iter().try_for_each(|&e| self.check(e).map(|_| ()))
    }

    pub fn mat_mul(&self, a: &SymbolMatrix, b: &SymbolMatrix) -> Result<SymbolMatrix, GfError> {
        if a.cols != b.rows {
            return Err(GfError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                a.rows, a.cols, b.rows, b.cols
            )));
        }
        let mut out = SymbolMatrix::zeros(a.rows, b.cols);
        for i in 0..a.rows {
            let dst = &mut out.entries[i * b.cols..(i + 1) * b.cols];
            for t in 0..a.cols {
                self.mul_add_into(dst, b.row(t), a.get(i, t));
            }
        }
        Ok(out)
    }

    /// Row rank by Gaussian elimination with first-nonzero pivoting.
    pub fn rank(&self, a: &SymbolMatrix) -> usize {
        let mut m = a.clone();
        let mut rank = 0;
        for col in 0..m.cols {
            if rank == m.rows {
                break;
            }
            let Some(pivot) = (rank..m.rows).find(|&r| m.get(r, col) != 0) else {
                continue;
            };
            m.swap_rows(pivot, rank);
            let inv = self.inv(m.get(rank, col)).expect("pivot is nonzero");
            let pivot_row = m.row(rank).to_vec();
            for r in (rank + 1)..m.rows {
                let f = m.get(r, col);
                if f != 0 {
                    let c = self.mul(f, inv);
                    self.mul_add_into(m.row_mut(r), &pivot_row, c);
                }
            }
            rank += 1;
        }
        rank
    }

    /// k x n Vandermonde matrix over the distinct nonzero points 1..=n:
    /// entry (i, j) = x_j^i. Every k x k submatrix is a square Vandermonde
    /// matrix on distinct points, hence invertible.
    pub fn make_mds(&self, k: usize, n: usize) -> Result<SymbolMatrix, GfError> {
        if k > n {
            return Err(GfError::InvalidMdsShape { k, n });
        }
        if n >= self.order() {
            return Err(GfError::FieldTooSmall {
                needed: n,
                order: self.order(),
            });
        }
        let mut m = SymbolMatrix::zeros(k, n);
        for j in 0..n {
            let x = (j + 1) as Symbol;
            let mut p: Symbol = 1;
            for i in 0..k {
                m.set(i, j, p);
                p = self.mul(p, x);
            }
        }
        Ok(m)
    }

    /// Exhaustive check that every `rows x rows` column-submatrix is
    /// invertible.
    pub fn is_mds(&self, a: &SymbolMatrix) -> Result<bool, GfError> {
        const LIMIT: u128 = 1_000_000;
        if a.rows > a.cols {
            return Err(GfError::InvalidMdsShape {
                k: a.rows,
                n: a.cols,
            });
        }
        let count = binomial(a.cols as u64, a.rows as u64);
        if count > LIMIT {
            return Err(GfError::CombinatorialLimit {
                count,
                limit: LIMIT,
            });
        }
        for cols in Combinations::new(a.cols, a.rows) {
            if self.rank(&a.select_columns(&cols)) < a.rows {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn multiplicative_order(g: u32, config: &FieldConfig) -> u32 {
    let mut x = g;
    let mut order = 1;
    while x != 1 {
        x = slow_mul(x, g, config.reduction_polynomial, config.word_bits);
        order += 1;
        if x == 0 {
            return 0;
        }
    }
    order
}

/// Dense row-major matrix of field symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Symbol>,
}

impl SymbolMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Symbol>) -> Result<Self, GfError> {
        if rows * cols != entries.len() {
            return Err(GfError::DimensionMismatch(format!(
                "{rows}x{cols} matrix given {} entries",
                entries.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Symbol>]) -> Result<Self, GfError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(GfError::DimensionMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Symbol] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Symbol {
        self.entries[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Symbol) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Symbol] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [Symbol] {
        &mut self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.entries.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn transpose(&self) -> SymbolMatrix {
        let mut out = SymbolMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    pub fn select_columns(&self, cols: &[usize]) -> SymbolMatrix {
        let mut out = SymbolMatrix::zeros(self.rows, cols.len());
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                out.set(r, j, self.get(r, c));
            }
        }
        out
    }
}
