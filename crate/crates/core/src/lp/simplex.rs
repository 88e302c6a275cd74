//! Dense two-phase primal simplex with Bland's rule.
//!
//! Bland's rule (lowest-index entering column, lowest-index leaving basic
//! variable among ratio ties) guarantees termination on degenerate models.

use super::{LpError, LpModel, Relation, RateSolution, Sense, SolveStatus, FEASIBILITY_TOL};

const PIVOT_EPS: f64 = 1e-11;

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= p;
        }
        self.rhs[row] /= p;
        self.rows[row][col] = 1.0;
        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row];
        for r in 0..self.rows.len() {
            if r == row {
                continue;
            }
            let f = self.rows[r][col];
            if f == 0.0 {
                continue;
            }
            for (a, b) in self.rows[r].iter_mut().zip(&pivot_row) {
                *a -= f * b;
            }
            self.rows[r][col] = 0.0;
            self.rhs[r] -= f * pivot_rhs;
        }
        self.basis[row] = col;
    }

    /// Maximizes `cost` over the current basis; `allowed` masks enterable columns.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> Result<(), ()> {
        loop {
            let entering = (0..self.ncols).find(|&j| {
                if !allowed[j] || self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j]
                    - self
                        .basis
                        .iter()
                        .enumerate()
                        .map(|(i, &b)| cost[b] * self.rows[i][j])
                        .sum::<f64>();
                reduced > PIVOT_EPS
            });
            let Some(col) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > PIVOT_EPS {
                    let ratio = self.rhs[i] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - PIVOT_EPS
                                || (ratio <= lr + PIVOT_EPS && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                return Err(());
            };
            self.pivot(row, col);
        }
    }

    fn value_of(&self, col: usize) -> f64 {
        self.basis
            .iter()
            .position(|&b| b == col)
            .map_or(0.0, |i| self.rhs[i])
    }
}

/// Solves `model`; an optimal assignment is re-checked against every row.
pub fn solve(model: &LpModel) -> Result<RateSolution, LpError> {
    let n = model.variables().len();
    let names: Vec<String> = model.variables().iter().map(|v| v.name.clone()).collect();

    // Shift variables by their lower bounds: x = y + lower, y >= 0.
    let lowers: Vec<f64> = model.variables().iter().map(|v| v.lower).collect();
    let mut slack_count = 0;
    let mut art_count = 0;
    let mut prepared = Vec::with_capacity(model.constraints().len());
    for c in model.constraints() {
        let mut coeffs = vec![0.0; n];
        for &(v, a) in &c.terms {
            coeffs[v] += a;
        }
        let shift: f64 = coeffs.iter().zip(&lowers).map(|(a, l)| a * l).sum();
        let mut rhs = c.rhs - shift;
        let mut rel = c.relation;
        if rhs < 0.0 {
            rhs = -rhs;
            coeffs.iter_mut().for_each(|a| *a = -*a);
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        match rel {
            Relation::Le => slack_count += 1,
            Relation::Ge => {
                slack_count += 1;
                art_count += 1;
            }
            Relation::Eq => art_count += 1,
        }
        prepared.push((coeffs, rel, rhs));
    }

    let ncols = n + slack_count + art_count;
    let art_start = n + slack_count;
    let mut t = Tableau {
        rows: Vec::new(),
        rhs: Vec::new(),
        basis: Vec::new(),
        ncols,
    };
    let (mut s, mut a) = (n, art_start);
    for (coeffs, rel, rhs) in prepared {
        let mut row = coeffs;
        row.resize(ncols, 0.0);
        let basic = match rel {
            Relation::Le => {
                row[s] = 1.0;
                s += 1;
                s - 1
            }
            Relation::Ge => {
                row[s] = -1.0;
                row[a] = 1.0;
                s += 1;
                a += 1;
                a - 1
            }
            Relation::Eq => {
                row[a] = 1.0;
                a += 1;
                a - 1
            }
        };
        t.rows.push(row);
        t.rhs.push(rhs);
        t.basis.push(basic);
    }

    let infeasible = || RateSolution {
        status: SolveStatus::Infeasible,
        objective_value: f64::NAN,
        names: names.clone(),
        values: vec![f64::NAN; n],
    };

    if art_count > 0 {
        let mut cost = vec![0.0; ncols];
        cost[art_start..].iter_mut().for_each(|c| *c = -1.0);
        let allowed = vec![true; ncols];
        t.optimize(&cost, &allowed)
            .expect("phase one objective is bounded by zero");
        let art_sum: f64 = (art_start..ncols).map(|j| t.value_of(j)).sum();
        let scale = 1.0f64.max(t.rhs.iter().fold(0.0, |m, v| m.max(v.abs())));
        if art_sum > FEASIBILITY_TOL * scale {
            return Ok(infeasible());
        }
        // Drive remaining (zero-valued) artificials out of the basis.
        let mut r = 0;
        while r < t.rows.len() {
            if t.basis[r] >= art_start {
                match (0..art_start).find(|&j| t.rows[r][j].abs() > PIVOT_EPS && !t.basis.contains(&j)) {
                    Some(j) => t.pivot(r, j),
                    None => {
                        // redundant row
                        t.rows.remove(r);
                        t.rhs.remove(r);
                        t.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    let sign = match model.sense() {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let mut cost = vec![0.0; ncols];
    for &(v, c) in model.objective() {
        cost[v] = sign * c;
    }
    let allowed: Vec<bool> = (0..ncols).map(|j| j < art_start).collect();
    if t.optimize(&cost, &allowed).is_err() {
        return Ok(RateSolution {
            status: SolveStatus::Unbounded,
            objective_value: sign * f64::INFINITY,
            names,
            values: vec![f64::NAN; n],
        });
    }

    let values: Vec<f64> = (0..n)
        .map(|j| {
            let v = t.value_of(j) + lowers[j];
            if v.abs() < 1e-13 {
                0.0
            } else {
                v
            }
        })
        .collect();
    let (violation, constraint) = model.max_violation(&values);
    if violation > FEASIBILITY_TOL {
        return Err(LpError::Verification {
            constraint,
            violation,
        });
    }
    Ok(RateSolution {
        status: SolveStatus::Optimal,
        objective_value: model.objective_value(&values),
        names,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(m: &mut LpModel, name: &str) -> usize {
        m.add_variable(name).unwrap()
    }

    #[test]
    fn single_bound() {
        let mut m = LpModel::new("t");
        let x = var(&mut m, "m");
        m.add_constraint("c", vec![(x, 1.0)], Relation::Le, 1.0).unwrap();
        m.set_objective(Sense::Maximize, vec![(x, 1.0)]).unwrap();
        let s = solve(&m).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_and_infeasible() {
        let mut m = LpModel::new("t");
        let x = var(&mut m, "x");
        m.set_objective(Sense::Maximize, vec![(x, 1.0)]).unwrap();
        assert_eq!(solve(&m).unwrap().status, SolveStatus::Unbounded);
        m.add_constraint("lo", vec![(x, 1.0)], Relation::Ge, 2.0).unwrap();
        m.add_constraint("hi", vec![(x, 1.0)], Relation::Le, 1.0).unwrap();
        assert_eq!(solve(&m).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn minimize_with_equality_and_negative_rhs() {
        let mut m = LpModel::new("t");
        let x = var(&mut m, "x");
        let y = var(&mut m, "y");
        m.add_constraint("sum", vec![(x, 1.0), (y, 1.0)], Relation::Eq, 3.0).unwrap();
        m.add_constraint("neg", vec![(x, -1.0)], Relation::Le, -1.0).unwrap();
        m.set_objective(Sense::Minimize, vec![(x, 2.0), (y, 1.0)]).unwrap();
        let s = solve(&m).unwrap();
        assert!((s.objective_value - 4.0).abs() < 1e-12);
        assert!((s.value("x").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's classic cycling example under Dantzig's rule.
        let mut m = LpModel::new("beale");
        let v: Vec<usize> = (0..4).map(|i| var(&mut m, &format!("x{i}"))).collect();
        m.add_constraint("r1", vec![(v[0], 0.25), (v[1], -60.0), (v[2], -0.04), (v[3], 9.0)], Relation::Le, 0.0)
            .unwrap();
        m.add_constraint("r2", vec![(v[0], 0.5), (v[1], -90.0), (v[2], -0.02), (v[3], 3.0)], Relation::Le, 0.0)
            .unwrap();
        m.add_constraint("r3", vec![(v[2], 1.0)], Relation::Le, 1.0).unwrap();
        m.set_objective(
            Sense::Maximize,
            vec![(v[0], 0.75), (v[1], -150.0), (v[2], 0.02), (v[3], -6.0)],
        )
        .unwrap();
        let s = solve(&m).unwrap();
        assert!((s.objective_value - 0.05).abs() < 1e-9);
    }

    #[test]
    fn redundant_equalities() {
        let mut m = LpModel::new("t");
        let x = var(&mut m, "x");
        let y = var(&mut m, "y");
        m.add_constraint("e1", vec![(x, 1.0), (y, 1.0)], Relation::Eq, 1.0).unwrap();
        m.add_constraint("e2", vec![(x, 2.0), (y, 2.0)], Relation::Eq, 2.0).unwrap();
        m.set_objective(Sense::Maximize, vec![(x, 1.0)]).unwrap();
        let s = solve(&m).unwrap();
        assert!((s.objective_value - 1.0).abs() < 1e-12);
    }
}
