//! Exact linear feasibility by Gaussian elimination of equalities followed by
//! Fourier–Motzkin elimination of the inequalities.

use nashflow::rational::Q;
use num::{Signed, Zero};

/// `a . x <= b`, or `<` when `strict`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Row {
    a: Vec<Q>,
    b: Q,
    strict: bool,
}

impl Row {
    fn is_trivial(&self) -> bool {
        self.a.iter().all(Q::is_zero)
    }

    fn holds_trivially(&self) -> bool {
        if self.strict {
            self.b.is_positive()
        } else {
            !self.b.is_negative()
        }
    }

    /// Scales so that the first nonzero coefficient has absolute value 1.
    fn normalized(mut self) -> Row {
        if let Some(k) = self.a.iter().position(|c| !c.is_zero()) {
            let s = self.a[k].abs();
            for c in &mut self.a {
                *c /= &s;
            }
            self.b /= &s;
        }
        self
    }
}

/// Interval end: value and whether it is attained.
pub type Bound = Option<(Q, bool)>;

#[derive(Debug, Clone, Default)]
pub struct System {
    n: usize,
    eqs: Vec<(Vec<Q>, Q)>,
    rows: Vec<Row>,
}

impl System {
    pub fn new(n: usize) -> Self {
        System {
            n,
            ..Default::default()
        }
    }

    fn dense(&self, terms: &[(usize, Q)]) -> Vec<Q> {
        let mut a = vec![Q::zero(); self.n];
        for (k, c) in terms {
            a[*k] += c;
        }
        a
    }

    pub fn eq(&mut self, terms: &[(usize, Q)], b: Q) {
        let a = self.dense(terms);
        self.eqs.push((a, b));
    }

    pub fn le(&mut self, terms: &[(usize, Q)], b: Q) {
        let a = self.dense(terms);
        self.rows.push(Row { a, b, strict: false });
    }

    pub fn lt(&mut self, terms: &[(usize, Q)], b: Q) {
        let a = self.dense(terms);
        self.rows.push(Row { a, b, strict: true });
    }

    pub fn ge(&mut self, terms: &[(usize, Q)], b: Q) {
        let neg: Vec<_> = terms.iter().map(|(k, c)| (*k, -c)).collect();
        self.le(&neg, -b);
    }

    pub fn gt(&mut self, terms: &[(usize, Q)], b: Q) {
        let neg: Vec<_> = terms.iter().map(|(k, c)| (*k, -c)).collect();
        self.lt(&neg, -b);
    }

    pub fn is_feasible(&self) -> bool {
        self.range(&[]).is_some()
    }

    /// Range of `target . x` over the solution set: `None` when the system is
    /// infeasible, otherwise the lower and upper bounds (`None` = unbounded).
    pub fn range(&self, target: &[(usize, Q)]) -> Option<(Bound, Bound)> {
        // Column `n` holds z = target . x.
        let z = self.n;
        let width = self.n + 1;
        let widen = |a: &[Q]| {
            let mut v = a.to_vec();
            v.push(Q::zero());
            v
        };
        let mut eqs: Vec<(Vec<Q>, Q)> = self.eqs.iter().map(|(a, b)| (widen(a), b.clone())).collect();
        let mut link = vec![Q::zero(); width];
        for (k, c) in target {
            link[*k] -= c;
        }
        link[z] = Q::from_integer(1.into());
        eqs.push((link, Q::zero()));
        let mut rows: Vec<Row> = self
            .rows
            .iter()
            .map(|r| Row {
                a: widen(&r.a),
                b: r.b.clone(),
                strict: r.strict,
            })
            .collect();

        // Gaussian elimination, never pivoting on z.
        let mut z_eqs = Vec::new();
        while let Some((a, b)) = eqs.pop() {
            let Some(p) = (0..self.n).find(|&k| !a[k].is_zero()) else {
                if a[z].is_zero() {
                    if !b.is_zero() {
                        return None;
                    }
                } else {
                    z_eqs.push((a, b));
                }
                continue;
            };
            let substitute = |c: &mut Vec<Q>, rhs: &mut Q| {
                if c[p].is_zero() {
                    return;
                }
                let f = &c[p] / &a[p];
                for k in 0..width {
                    let d = &f * &a[k];
                    c[k] -= d;
                }
                *rhs -= &f * &b;
            };
            for (c, rhs) in eqs.iter_mut().chain(z_eqs.iter_mut()) {
                substitute(c, rhs);
            }
            for r in rows.iter_mut() {
                substitute(&mut r.a, &mut r.b);
            }
        }
        for (a, b) in z_eqs {
            rows.push(Row { a: a.clone(), b: b.clone(), strict: false });
            rows.push(Row {
                a: a.iter().map(|c| -c).collect(),
                b: -b,
                strict: false,
            });
        }

        let mut left: Vec<usize> = (0..self.n).collect();
        rows = tidy(rows)?;
        while !left.is_empty() {
            let (pick, _) = left
                .iter()
                .enumerate()
                .map(|(i, &k)| {
                    let pos = rows.iter().filter(|r| r.a[k].is_positive()).count();
                    let neg = rows.iter().filter(|r| r.a[k].is_negative()).count();
                    (i, pos * neg)
                })
                .min_by_key(|(_, cost)| *cost)
                .unwrap();
            let k = left.swap_remove(pick);
            let (mut pos, mut neg, mut next) = (Vec::new(), Vec::new(), Vec::new());
            for r in rows {
                if r.a[k].is_positive() {
                    pos.push(r);
                } else if r.a[k].is_negative() {
                    neg.push(r);
                } else {
                    next.push(r);
                }
            }
            for p in &pos {
                for q in &neg {
                    let (fp, fq) = (-&q.a[k], p.a[k].clone());
                    let a = (0..width).map(|i| &p.a[i] * &fp + &q.a[i] * &fq).collect();
                    next.push(Row {
                        a,
                        b: &p.b * &fp + &q.b * &fq,
                        strict: p.strict || q.strict,
                    });
                }
            }
            rows = tidy(next)?;
        }

        let (mut lo, mut hi): (Bound, Bound) = (None, None);
        for r in rows {
            let c = &r.a[z];
            let v = &r.b / c;
            if c.is_positive() {
                let tighter = match &hi {
                    None => true,
                    Some((h, closed)) => v < *h || (v == *h && *closed && r.strict),
                };
                if tighter {
                    hi = Some((v, !r.strict));
                }
            } else {
                let tighter = match &lo {
                    None => true,
                    Some((l, closed)) => v > *l || (v == *l && *closed && r.strict),
                };
                if tighter {
                    lo = Some((v, !r.strict));
                }
            }
        }
        if let (Some((l, lc)), Some((h, hc))) = (&lo, &hi) {
            if l > h || (l == h && !(*lc && *hc)) {
                return None;
            }
        }
        Some((lo, hi))
    }
}

/// Drops trivial rows (failing on contradictions) and duplicates.
fn tidy(rows: Vec<Row>) -> Option<Vec<Row>> {
    let mut out: Vec<Row> = Vec::with_capacity(rows.len());
    for r in rows {
        if r.is_trivial() {
            if !r.holds_trivially() {
                return None;
            }
            continue;
        }
        let r = r.normalized();
        if let Some(same) = out.iter_mut().find(|o| o.a == r.a) {
            if r.b < same.b || (r.b == same.b && r.strict) {
                *same = r;
            }
        } else {
            out.push(r);
        }
    }
    Some(out)
}
