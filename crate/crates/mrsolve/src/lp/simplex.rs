//! Dense two-phase primal simplex with Bland's rule.
//!
//! Problems here are small (hundreds of rows, a few thousand columns) and
//! the column generation driver re-solves from scratch every round, so a
//! dense tableau is simpler than anything clever. Bland's rule keeps the
//! pivot sequence deterministic and cycle-free.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `min c·x` subject to the rows and `x >= 0`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per row: `<= 0` for `Le`, `>= 0` for `Ge`, free for `Eq`.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

impl LpProblem {
    pub fn add_var(&mut self, cost: f64) -> usize {
        self.objective.push(cost);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.rows.push(Row { coeffs, sense, rhs });
        self.rows.len() - 1
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    /// Plain-text dump: one `min` line, then one line per row.
    pub fn dump(&self) -> String {
        let mut s = String::from("min");
        for (j, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                s += &format!(" {c}*x{j}");
            }
        }
        s.push('\n');
        for (i, r) in self.rows.iter().enumerate() {
            s += &format!("r{i}:");
            for (j, a) in &r.coeffs {
                s += &format!(" {a}*x{j}");
            }
            let op = match r.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            s += &format!(" {op} {}\n", r.rhs);
        }
        s
    }
}

struct Tableau {
    m: usize,
    width: usize,
    a: Vec<f64>, // m rows of `width` entries; last entry is the rhs
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.a[r * w + c];
        for j in 0..w {
            self.a[r * w + j] /= p;
        }
        let prow: Vec<f64> = self.a[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * w + c];
            if f != 0.0 {
                let row = &mut self.a[i * w..(i + 1) * w];
                for j in 0..w {
                    row[j] -= f * prow[j];
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Reduced costs `c_j - c_B B^-1 A_j` for all columns.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (j, dj) in d.iter_mut().enumerate() {
                    *dj -= cb * self.at(i, j);
                }
            }
        }
        d
    }

    /// Runs Bland's rule until optimal. `allowed` masks enterable columns.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool], pivots: &mut usize, limit: usize) -> Result<()> {
        loop {
            let d = self.reduced_costs(cost);
            let Some(enter) = (0..cost.len()).find(|&j| allowed[j] && d[j] < -PIVOT_TOL) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, enter);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some((l, best)) => {
                            ratio < best - PIVOT_TOL || (ratio <= best + PIVOT_TOL && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Unbounded);
            };
            self.pivot(r, enter);
            *pivots += 1;
            if *pivots > limit {
                return Err(Error::IterationLimit(format!("simplex exceeded {limit} pivots")));
            }
        }
    }
}

pub fn solve_lp(p: &LpProblem) -> Result<LpSolution> {
    let n = p.n_vars();
    let m = p.rows.len();
    // normalize to non-negative right-hand sides
    let mut sign = vec![1.0; m];
    let mut senses = Vec::with_capacity(m);
    for (i, r) in p.rows.iter().enumerate() {
        if let Some(&(j, _)) = r.coeffs.iter().find(|(j, _)| *j >= n) {
            return Err(Error::Invalid(format!("row {i} references unknown variable {j}")));
        }
        let s = if r.rhs < 0.0 {
            sign[i] = -1.0;
            match r.sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            }
        } else {
            r.sense
        };
        senses.push(s);
    }
    let n_slack = senses.iter().filter(|s| **s != Sense::Eq).count();
    let n_art = senses.iter().filter(|s| **s != Sense::Le).count();
    let cols = n + n_slack + n_art;
    let width = cols + 1;
    let mut t = Tableau {
        m,
        width,
        a: vec![0.0; m * width],
        basis: vec![0; m],
    };
    let mut identity_col = vec![0usize; m];
    let (mut next_slack, mut next_art) = (n, n + n_slack);
    for (i, r) in p.rows.iter().enumerate() {
        for &(j, a) in &r.coeffs {
            t.a[i * width + j] += sign[i] * a;
        }
        t.a[i * width + cols] = sign[i] * r.rhs;
        match senses[i] {
            Sense::Le => {
                t.a[i * width + next_slack] = 1.0;
                identity_col[i] = next_slack;
                next_slack += 1;
            }
            Sense::Ge => {
                t.a[i * width + next_slack] = -1.0;
                next_slack += 1;
                t.a[i * width + next_art] = 1.0;
                identity_col[i] = next_art;
                next_art += 1;
            }
            Sense::Eq => {
                t.a[i * width + next_art] = 1.0;
                identity_col[i] = next_art;
                next_art += 1;
            }
        }
        t.basis[i] = identity_col[i];
    }
    let is_art = |j: usize| j >= n + n_slack && j < cols;
    let limit = 50 * (m + cols) + 10_000;
    let mut pivots = 0;

    if n_art > 0 {
        let phase1: Vec<f64> = (0..cols).map(|j| if is_art(j) { 1.0 } else { 0.0 }).collect();
        let allowed = vec![true; cols];
        t.optimize(&phase1, &allowed, &mut pivots, limit)?;
        let infeas: f64 = (0..m).filter(|&i| is_art(t.basis[i])).map(|i| t.rhs(i)).sum();
        let scale = p.rows.iter().map(|r| r.rhs.abs()).fold(1.0, f64::max);
        if infeas > 1e-7 * scale {
            return Err(Error::Infeasible);
        }
        // drive zero-valued artificials out of the basis where possible
        for i in 0..m {
            if is_art(t.basis[i]) {
                if let Some(j) = (0..n + n_slack).find(|&j| t.at(i, j).abs() > PIVOT_TOL) {
                    t.pivot(i, j);
                }
            }
        }
    }
    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(&p.objective);
    let allowed: Vec<bool> = (0..cols).map(|j| !is_art(j)).collect();
    t.optimize(&cost, &allowed, &mut pivots, limit)?;

    let mut x = vec![0.0; n];
    for i in 0..m {
        if t.basis[i] < n {
            x[t.basis[i]] = t.rhs(i).max(0.0);
        }
    }
    let objective = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    // column `identity_col[i]` of the final tableau is B^-1 e_i
    let duals = (0..m)
        .map(|i| {
            let y: f64 = (0..m).map(|k| cost[t.basis[k]] * t.at(k, identity_col[i])).sum();
            sign[i] * y
        })
        .collect();
    Ok(LpSolution {
        x,
        objective,
        duals,
        pivots,
    })
}
