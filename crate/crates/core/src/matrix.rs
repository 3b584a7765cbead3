//! Sparse `{-1, 0, +1}` measurement matrices with constant row weight.
//!
//! A matrix is stored row-major (every row has exactly `l` entries, sorted
//! by column) together with its exact transpose, so both measurement and
//! adjoint products cost `O(l m)` additions.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{check_len, param, Error, Result};
use crate::rng::rng;

/// Construction parameters for [`generate_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixParams {
    pub n: usize,
    pub m: usize,
    /// Row weight `L`.
    pub l: usize,
    /// Also force constant column weight `R = L M / N`.
    pub regular_columns: bool,
    pub seed: u64,
}

impl MatrixParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return param(format!("need m, n >= 1, got m={}, n={}", self.m, self.n));
        }
        if self.l == 0 || self.l > self.n {
            return param(format!("row weight must lie in 1..={}, got {}", self.n, self.l));
        }
        if self.regular_columns && !(self.l * self.m).is_multiple_of(self.n) {
            return param(format!(
                "regular columns need L*M divisible by N (L={}, M={}, N={})",
                self.l, self.m, self.n
            ));
        }
        Ok(())
    }

    /// Column weight `R = L M / N` (fractional unless regular).
    pub fn column_weight(&self) -> f64 {
        (self.l * self.m) as f64 / self.n as f64
    }
}

/// A sparse sign matrix with constant row weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseSignMatrix {
    m: usize,
    n: usize,
    l: usize,
    seed: u64,
    rows: Vec<(usize, i8)>,
    col_ptr: Vec<usize>,
    cols: Vec<(usize, i8)>,
}

impl SparseSignMatrix {
    /// Builds a matrix from explicit rows of `(column, sign)` pairs.
    ///
    /// Every row must have the same number of distinct in-range columns and
    /// signs in `{-1, +1}`. Rows are stored with columns sorted ascending.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, i8)>>, seed: u64) -> Result<Self> {
        let m = rows.len();
        let l = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(m * l);
        for (j, mut row) in rows.into_iter().enumerate() {
            if row.len() != l {
                return param(format!("row {j} has weight {}, expected {l}", row.len()));
            }
            row.sort_unstable_by_key(|e| e.0);
            for (k, &(c, s)) in row.iter().enumerate() {
                if c >= n {
                    return Err(Error::Range(format!("row {j}: column {c} >= {n}")));
                }
                if s != 1 && s != -1 {
                    return param(format!("row {j}: sign {s} not in {{-1, +1}}"));
                }
                if k > 0 && row[k - 1].0 == c {
                    return param(format!("row {j}: duplicate column {c}"));
                }
            }
            flat.extend(row);
        }
        if m > 0 && l == 0 {
            return param("rows must be nonempty");
        }
        Ok(Self::assemble(m, n, l, seed, flat))
    }

    fn assemble(m: usize, n: usize, l: usize, seed: u64, rows: Vec<(usize, i8)>) -> Self {
        let mut col_ptr = vec![0usize; n + 1];
        for &(c, _) in &rows {
            col_ptr[c + 1] += 1;
        }
        for i in 0..n {
            col_ptr[i + 1] += col_ptr[i];
        }
        let mut fill = col_ptr.clone();
        let mut cols = vec![(0usize, 0i8); rows.len()];
        for j in 0..m {
            for &(c, s) in &rows[j * l..(j + 1) * l] {
                cols[fill[c]] = (j, s);
                fill[c] += 1;
            }
        }
        Self {
            m,
            n,
            l,
            seed,
            rows,
            col_ptr,
            cols,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Row weight `L`.
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of non-zero entries, `L M`.
    pub fn nnz(&self) -> usize {
        self.rows.len()
    }

    /// Entries of row `j` as `(column, sign)`, columns ascending.
    pub fn row(&self, j: usize) -> &[(usize, i8)] {
        &self.rows[j * self.l..(j + 1) * self.l]
    }

    /// Entries of column `i` as `(row, sign)`, rows ascending.
    pub fn col(&self, i: usize) -> &[(usize, i8)] {
        &self.cols[self.col_ptr[i]..self.col_ptr[i + 1]]
    }

    pub fn column_weights(&self) -> Vec<usize> {
        self.col_ptr.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// The matrix restricted to its first `k` rows.
    pub fn take_rows(&self, k: usize) -> Result<Self> {
        if k > self.m {
            return param(format!("prefix of {k} rows exceeds M={}", self.m));
        }
        let l = if k == 0 { 0 } else { self.l };
        Ok(Self::assemble(
            k,
            self.n,
            l,
            self.seed,
            self.rows[..k * self.l].to_vec(),
        ))
    }

    /// `y = Phi x` using only additions and subtractions.
    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, x.len())?;
        Ok((0..self.m)
            .map(|j| {
                self.row(j).iter().fold(0.0, |acc, &(c, s)| {
                    if s > 0 {
                        acc + x[c]
                    } else {
                        acc - x[c]
                    }
                })
            })
            .collect())
    }

    /// `Phi^T r`.
    pub fn transpose_mul(&self, r: &[f64]) -> Result<Vec<f64>> {
        check_len(self.m, r.len())?;
        Ok((0..self.n)
            .map(|i| {
                self.col(i)
                    .iter()
                    .map(|&(j, s)| s as f64 * r[j])
                    .sum()
            })
            .collect())
    }

    /// Dense row-major expansion (`m` rows of length `n`).
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.m)
            .map(|j| {
                let mut row = vec![0.0; self.n];
                for &(c, s) in self.row(j) {
                    row[c] = s as f64;
                }
                row
            })
            .collect()
    }
}

/// Generates a sparse sign matrix.
///
/// Rows-only: each row draws `L` distinct columns uniformly. Regular columns:
/// the `L M` row slots are filled by `R` independent random permutations of
/// the columns (socket model); a permutation that would put the same column
/// twice in a row straddling two permutation segments is redrawn. Signs are
/// drawn iid uniform after the topology is fixed.
pub fn generate_matrix(params: &MatrixParams) -> Result<SparseSignMatrix> {
    params.validate()?;
    let MatrixParams { n, m, l, .. } = *params;
    let mut rng = rng(params.seed);
    let mut cols = vec![0usize; l * m];

    if params.regular_columns {
        let r = l * m / n;
        let mut perm: Vec<usize> = (0..n).collect();
        for seg in 0..r {
            let start = seg * n;
            let straddler = (start % l != 0).then(|| start / l);
            let mut attempts = 0;
            loop {
                perm.shuffle(&mut rng);
                cols[start..start + n].copy_from_slice(&perm);
                let ok = match straddler {
                    None => true,
                    Some(j) => {
                        let slots = &cols[j * l..(j + 1) * l];
                        let mut seen: Vec<usize> = slots.to_vec();
                        seen.sort_unstable();
                        seen.windows(2).all(|w| w[0] != w[1])
                    }
                };
                if ok {
                    break;
                }
                attempts += 1;
                if attempts > 10_000 {
                    return Err(Error::Numeric(
                        "socket construction kept producing duplicate edges".into(),
                    ));
                }
            }
        }
    } else {
        for j in 0..m {
            for (k, c) in sample(&mut rng, n, l).into_iter().enumerate() {
                cols[j * l + k] = c;
            }
        }
    }

    let mut flat = Vec::with_capacity(l * m);
    for j in 0..m {
        let row = &mut cols[j * l..(j + 1) * l];
        row.sort_unstable();
        flat.extend(row.iter().map(|&c| (c, 0i8)));
    }
    for e in &mut flat {
        e.1 = if rng.gen::<bool>() { 1 } else { -1 };
    }
    Ok(SparseSignMatrix::assemble(m, n, l, params.seed, flat))
}

/// Result of [`rule_of_thumb_params`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThumbParams {
    pub params: MatrixParams,
    /// Column weight `R = L M / N`.
    pub r: f64,
    /// Set when the suggested `M` exceeds `N`.
    pub m_exceeds_n: bool,
}

impl ThumbParams {
    /// Replaces the row weight (e.g. `L = 2/S`) and re-applies the
    /// divisibility adjustment.
    pub fn with_row_weight(self, l: usize) -> Result<Self> {
        let p = self.params;
        finish_thumb(p.n, l, p.m, p.regular_columns, p.seed)
    }
}

/// Suggested `L ~ 1/S`, `M = ceil(c_m S N log2 N)`, `R = L M / N`.
///
/// With `regular_columns`, `M` is rounded up to the next multiple of
/// `N / gcd(L, N)` so that `R` is an integer.
pub fn rule_of_thumb_params(
    n: usize,
    s: f64,
    c_m: f64,
    regular_columns: bool,
) -> Result<ThumbParams> {
    if !(s > 0.0 && s < 1.0) {
        return param(format!("sparsity rate must lie in (0, 1), got {s}"));
    }
    if n < 2 || !(c_m > 0.0) {
        return param(format!("need n >= 2 and c_m > 0, got n={n}, c_m={c_m}"));
    }
    let l = ((1.0 / s).round() as usize).clamp(1, n);
    let m = (c_m * s * n as f64 * (n as f64).log2()).ceil().max(1.0) as usize;
    finish_thumb(n, l, m, regular_columns, 0)
}

fn finish_thumb(n: usize, l: usize, m: usize, regular: bool, seed: u64) -> Result<ThumbParams> {
    let m = if regular {
        let step = n / gcd(l, n);
        m.div_ceil(step) * step
    } else {
        m
    };
    let params = MatrixParams {
        n,
        m,
        l,
        regular_columns: regular,
        seed,
    };
    params.validate()?;
    Ok(ThumbParams {
        params,
        r: params.column_weight(),
        m_exceeds_n: m > n,
    })
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Text form: header `csldpc v1 M N L seed`, then one `row col sign` line per
/// edge, 0-based, rows ascending and columns ascending within a row.
pub fn serialize_matrix(phi: &SparseSignMatrix) -> String {
    let mut out = String::with_capacity(16 * phi.nnz() + 64);
    let _ = writeln!(out, "csldpc v1 {} {} {} {}", phi.m, phi.n, phi.l, phi.seed);
    for j in 0..phi.m {
        for &(c, s) in phi.row(j) {
            let _ = writeln!(out, "{j} {c} {s}");
        }
    }
    out
}

/// Parses the format written by [`serialize_matrix`].
pub fn parse_matrix(text: &str) -> Result<SparseSignMatrix> {
    let perr = |line: usize, msg: String| Error::Parse { line, msg };
    let mut lines = text.lines().enumerate().map(|(i, s)| (i + 1, s));
    let (_, header) = lines
        .next()
        .ok_or_else(|| perr(1, "empty input".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 6 || fields[0] != "csldpc" || fields[1] != "v1" {
        return Err(perr(1, format!("bad header {header:?}")));
    }
    let num = |s: &str, what: &str| -> Result<u64> {
        s.parse::<u64>()
            .map_err(|_| perr(1, format!("bad {what} {s:?}")))
    };
    let m = num(fields[2], "M")? as usize;
    let n = num(fields[3], "N")? as usize;
    let l = num(fields[4], "L")? as usize;
    let seed = num(fields[5], "seed")?;
    if m == 0 || n == 0 {
        return Err(perr(1, format!("need M, N >= 1, got M={m}, N={n}")));
    }
    if l == 0 || l > n {
        return Err(perr(1, format!("row weight {l} outside 1..={n}")));
    }

    let mut flat: Vec<(usize, i8)> = Vec::with_capacity(m * l);
    let mut last = (0usize, None::<usize>);
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(perr(ln, format!("expected `row col sign`, got {line:?}")));
        }
        let row: usize = f[0]
            .parse()
            .map_err(|_| perr(ln, format!("bad row {:?}", f[0])))?;
        let col: usize = f[1]
            .parse()
            .map_err(|_| perr(ln, format!("bad column {:?}", f[1])))?;
        let sign: i8 = match f[2] {
            "1" => 1,
            "-1" => -1,
            other => return Err(perr(ln, format!("sign {other:?} not in {{1, -1}}"))),
        };
        if row >= m {
            return Err(perr(ln, format!("row {row} >= M={m}")));
        }
        if col >= n {
            return Err(perr(ln, format!("column {col} >= N={n}")));
        }
        let expected_row = flat.len() / l;
        if row != expected_row {
            return Err(perr(
                ln,
                format!("expected an edge of row {expected_row}, got row {row}"),
            ));
        }
        if last.0 == row {
            if let Some(prev) = last.1 {
                if col == prev {
                    return Err(perr(ln, format!("duplicate edge ({row}, {col})")));
                }
                if col < prev {
                    return Err(perr(ln, format!("columns of row {row} not ascending")));
                }
            }
        }
        last = (row, Some(col));
        flat.push((col, sign));
        if flat.len().is_multiple_of(l) {
            last = (row + 1, None);
        }
    }
    if flat.len() != m * l {
        return Err(perr(
            text.lines().count(),
            format!("expected {} edges, found {}", m * l, flat.len()),
        ));
    }
    Ok(SparseSignMatrix::assemble(m, n, l, seed, flat))
}
