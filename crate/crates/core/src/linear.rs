//! Linear expressions over integer unknowns and an entailment check by
//! Fourier-Motzkin elimination.

use std::collections::BTreeMap;
use std::fmt;

/// `Σ c_k·k + constant`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinExpr<K: Ord> {
    pub coeffs: BTreeMap<K, i64>,
    pub constant: i64,
}

impl<K: Ord + Clone> LinExpr<K> {
    pub fn constant(c: i64) -> Self {
        LinExpr { coeffs: BTreeMap::new(), constant: c }
    }

    pub fn var(k: K) -> Self {
        LinExpr { coeffs: BTreeMap::from([(k, 1)]), constant: 0 }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.coeffs.keys()
    }

    pub fn add(&self, other: &LinExpr<K>) -> LinExpr<K> {
        self.add_scaled(other, 1)
    }

    pub fn sub(&self, other: &LinExpr<K>) -> LinExpr<K> {
        self.add_scaled(other, -1)
    }

    pub fn add_const(&self, c: i64) -> LinExpr<K> {
        LinExpr { coeffs: self.coeffs.clone(), constant: self.constant + c }
    }

    pub fn scale(&self, f: i64) -> LinExpr<K> {
        LinExpr::constant(0).add_scaled(self, f)
    }

    fn add_scaled(&self, other: &LinExpr<K>, f: i64) -> LinExpr<K> {
        let mut out = self.clone();
        for (k, c) in &other.coeffs {
            let e = out.coeffs.entry(k.clone()).or_insert(0);
            *e += c * f;
            if *e == 0 {
                out.coeffs.remove(k);
            }
        }
        out.constant += other.constant * f;
        out
    }
}

impl<K: Ord + fmt::Display> fmt::Display for LinExpr<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in &self.coeffs {
            let sign = if *c < 0 { "-" } else if first { "" } else { "+" };
            let mag = c.abs();
            if !first {
                write!(f, " {sign} ")?;
            } else {
                write!(f, "{sign}")?;
            }
            if mag == 1 {
                write!(f, "{k}")?;
            } else {
                write!(f, "{mag}*{k}")?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant != 0 {
            write!(f, " {} {}", if self.constant < 0 { "-" } else { "+" }, self.constant.abs())
        } else {
            Ok(())
        }
    }
}

/// Systems larger than this are given up on (reported as satisfiable).
const MAX_ROWS: usize = 4000;

type Row = (Vec<i128>, i128);

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Divides by the gcd of the coefficients and rounds the constant down,
/// which is exact over the integers.
fn normalize(row: &mut Row) {
    let g = row.0.iter().fold(0, |g, &c| gcd(g, c));
    if g > 1 {
        row.0.iter_mut().for_each(|c| *c /= g);
        row.1 = row.1.div_euclid(g);
    }
}

/// True if the rows `a·x + c ≥ 0` have no integer solution. Only infeasibility
/// over the rationals (after integer rounding) is detected, so `false` may be
/// returned for integer-infeasible systems.
fn infeasible(mut rows: Vec<Row>, nvars: usize) -> bool {
    for r in rows.iter_mut() {
        normalize(r);
    }
    for x in 0..nvars {
        if rows.iter().any(|r| r.0.iter().all(|&c| c == 0) && r.1 < 0) {
            return true;
        }
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for r in rows {
            match r.0[x].signum() {
                1 => pos.push(r),
                -1 => neg.push(r),
                _ => rest.push(r),
            }
        }
        if pos.len() * neg.len() + rest.len() > MAX_ROWS {
            return false;
        }
        for p in &pos {
            for n in &neg {
                let (a, b) = (p.0[x], -n.0[x]);
                let coeffs = p.0.iter().zip(&n.0).map(|(u, v)| u * b + v * a).collect();
                let mut row = (coeffs, p.1 * b + n.1 * a);
                normalize(&mut row);
                if !rest.contains(&row) {
                    rest.push(row);
                }
            }
        }
        rows = rest;
    }
    rows.iter().any(|r| r.1 < 0)
}

/// Does the conjunction of `h ≥ 0` for all hypotheses imply `goal ≥ 0` for
/// all integer values of the unknowns?
pub fn entails<K: Ord + Clone>(hyps: &[LinExpr<K>], goal: &LinExpr<K>) -> bool {
    let mut keys: Vec<K> = hyps.iter().chain([goal]).flat_map(|e| e.coeffs.keys().cloned()).collect();
    keys.sort();
    keys.dedup();
    let row = |e: &LinExpr<K>| -> Row {
        let coeffs = keys.iter().map(|k| *e.coeffs.get(k).unwrap_or(&0) as i128).collect();
        (coeffs, e.constant as i128)
    };
    let mut rows: Vec<Row> = hyps.iter().map(row).collect();
    // negated goal: -goal - 1 >= 0
    let (g, c) = row(goal);
    rows.push((g.into_iter().map(|x| -x).collect(), -c - 1));
    infeasible(rows, keys.len())
}
