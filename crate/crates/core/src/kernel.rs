//! Exact Markov kernels: sparse rational transition matrices over a shared
//! state space, with powers, mixtures, time reversal, symmetrization,
//! induced chains on subsets, stationary solves, and renewal helpers.

use crate::error::{Error, Result};
use crate::linalg::solve_exact;
use crate::ratio::{format_rat, rone, to_f64, Rat};
use crate::space::StateSpace;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::rc::Rc;

/// Row-stochastic kernel with exact rational entries. Rows are sparse,
/// sorted by column, and sum to 1; construction validates this.
#[derive(Clone, Debug)]
pub struct Kernel<S: Eq + Hash + Clone> {
    space: Rc<StateSpace<S>>,
    rows: Vec<Vec<(usize, Rat)>>,
}

fn normalize_row(n: usize, row: Vec<(usize, Rat)>) -> Result<Vec<(usize, Rat)>> {
    let mut acc: HashMap<usize, Rat> = HashMap::new();
    for (j, p) in row {
        if j >= n {
            return Err(Error::InvalidParameter(format!(
                "column {j} out of range for {n} states"
            )));
        }
        if p < Rat::zero() {
            return Err(Error::InvalidParameter(format!(
                "negative transition probability {}",
                format_rat(&p)
            )));
        }
        if !p.is_zero() {
            *acc.entry(j).or_insert_with(Rat::zero) += p;
        }
    }
    let mut out: Vec<(usize, Rat)> = acc.into_iter().collect();
    out.sort_by_key(|&(j, _)| j);
    Ok(out)
}

impl<S: Eq + Hash + Clone> Kernel<S> {
    /// Builds a kernel from per-state sparse rows; entries with the same
    /// column are merged, zeros dropped, and each row must sum to exactly 1.
    pub fn new(space: Rc<StateSpace<S>>, rows: Vec<Vec<(usize, Rat)>>) -> Result<Self> {
        if rows.len() != space.len() {
            return Err(Error::InvalidParameter(format!(
                "{} rows for {} states",
                rows.len(),
                space.len()
            )));
        }
        let n = space.len();
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                let row = normalize_row(n, row)?;
                let sum: Rat = row.iter().map(|(_, p)| p).sum();
                if !sum.is_one() {
                    return Err(Error::InvalidParameter(format!(
                        "row {i} sums to {}, not 1",
                        format_rat(&sum)
                    )));
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Kernel { space, rows })
    }

    pub fn identity(space: Rc<StateSpace<S>>) -> Self {
        let rows = (0..space.len()).map(|i| vec![(i, rone())]).collect();
        Kernel { space, rows }
    }

    pub fn space(&self) -> &Rc<StateSpace<S>> {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.space.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, Rat)] {
        &self.rows[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> Rat {
        match self.rows[i].binary_search_by_key(&j, |&(c, _)| c) {
            Ok(pos) => self.rows[i][pos].1.clone(),
            Err(_) => Rat::zero(),
        }
    }

    /// One step of a row measure: `(mu P)_j = sum_i mu_i P(i, j)`.
    pub fn measure_step(&self, mu: &[Rat]) -> Vec<Rat> {
        let mut out = vec![Rat::zero(); self.n()];
        for (i, m) in mu.iter().enumerate() {
            if m.is_zero() {
                continue;
            }
            for (j, p) in &self.rows[i] {
                out[*j] += m * p;
            }
        }
        out
    }

    /// One step of a column function: `(P f)_i = sum_j P(i, j) f_j`.
    pub fn function_step(&self, f: &[Rat]) -> Vec<Rat> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|(j, p)| p * &f[*j]).sum())
            .collect()
    }

    /// Distribution after `n` steps started from the point mass at `from`.
    pub fn distribution_after(&self, from: usize, n: usize) -> Vec<Rat> {
        let mut mu = vec![Rat::zero(); self.n()];
        mu[from] = rone();
        for _ in 0..n {
            mu = self.measure_step(&mu);
        }
        mu
    }

    pub fn entry_power(&self, from: usize, to: usize, n: usize) -> Rat {
        self.distribution_after(from, n)[to].clone()
    }

    /// Convex combination of kernels over the same space.
    pub fn mixture(parts: &[(Rat, &Kernel<S>)]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::BadMixtureWeights);
        }
        let space = parts[0].1.space.clone();
        let mut total = Rat::zero();
        for (w, k) in parts {
            if !Rc::ptr_eq(&k.space, &space) {
                return Err(Error::InvalidParameter(
                    "mixture components live on different state spaces".into(),
                ));
            }
            if *w < Rat::zero() {
                return Err(Error::BadMixtureWeights);
            }
            total += w;
        }
        if !total.is_one() {
            return Err(Error::BadMixtureWeights);
        }
        let rows = (0..space.len())
            .map(|i| {
                let mut row = Vec::new();
                for (w, k) in parts {
                    if w.is_zero() {
                        continue;
                    }
                    for (j, p) in &k.rows[i] {
                        row.push((*j, w * p));
                    }
                }
                row
            })
            .collect();
        Kernel::new(space, rows)
    }

    /// The lazy version `(I + P) / 2`.
    pub fn lazy(&self) -> Kernel<S> {
        let half = crate::ratio::rat(1, 2);
        Kernel::mixture(&[(half.clone(), &Kernel::identity(self.space.clone())), (half, self)])
            .expect("lazy mixture weights are valid")
    }

    /// The uniform average `(1 / (m + 1)) * sum_{i = 0..=m} P^i`.
    pub fn average_of_powers(&self, m: usize) -> Kernel<S> {
        let n = self.n();
        let w = Rat::new((1).into(), (m as i64 + 1).into());
        let mut rows: Vec<Vec<(usize, Rat)>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut mu = vec![Rat::zero(); n];
            mu[i] = rone();
            let mut acc = mu.clone();
            for _ in 0..m {
                mu = self.measure_step(&mu);
                for (a, b) in acc.iter_mut().zip(mu.iter()) {
                    *a += b;
                }
            }
            rows.push(
                acc.into_iter()
                    .enumerate()
                    .filter(|(_, p)| !p.is_zero())
                    .map(|(j, p)| (j, &w * p))
                    .collect(),
            );
        }
        Kernel::new(self.space.clone(), rows).expect("average of stochastic kernels is stochastic")
    }

    /// The full `n`-step kernel `P^n`.
    pub fn power(&self, n: usize) -> Kernel<S> {
        let mut rows = Vec::with_capacity(self.n());
        for i in 0..self.n() {
            let mu = self.distribution_after(i, n);
            rows.push(
                mu.into_iter()
                    .enumerate()
                    .filter(|(_, p)| !p.is_zero())
                    .collect(),
            );
        }
        Kernel {
            space: self.space.clone(),
            rows,
        }
    }

    pub fn is_doubly_stochastic(&self) -> bool {
        let mut col = vec![Rat::zero(); self.n()];
        for row in &self.rows {
            for (j, p) in row {
                col[*j] += p;
            }
        }
        col.iter().all(|c| c.is_one())
    }

    /// Support of transitions as an adjacency list (for reachability).
    pub fn support(&self) -> Vec<Vec<usize>> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, _)| j).collect())
            .collect()
    }

    pub fn to_float(&self) -> FloatKernel {
        FloatKernel {
            n: self.n(),
            rows: self
                .rows
                .iter()
                .map(|row| row.iter().map(|(j, p)| (*j, to_f64(p))).collect())
                .collect(),
        }
    }
}

impl<S: Eq + Hash + Clone + fmt::Debug> Kernel<S> {
    /// Verifies `pi P = pi` exactly; the error carries the worst-violating
    /// state.
    pub fn check_stationary(&self, pi: &[Rat]) -> Result<()> {
        let after = self.measure_step(pi);
        let mut worst: Option<(usize, Rat)> = None;
        for j in 0..self.n() {
            let diff = (&after[j] - &pi[j]).abs();
            if !diff.is_zero() && worst.as_ref().map_or(true, |(_, w)| diff > *w) {
                worst = Some((j, diff));
            }
        }
        match worst {
            None => Ok(()),
            Some((j, d)) => Err(Error::NotStationary {
                state: format!("{:?}", self.space.state(j)),
                violation: format_rat(&d),
            }),
        }
    }

    /// Verifies detailed balance `pi(x) P(x, y) = pi(y) P(y, x)` exactly.
    pub fn check_reversible(&self, pi: &[Rat]) -> Result<()> {
        for i in 0..self.n() {
            for (j, p) in &self.rows[i] {
                let lhs = &pi[i] * p;
                let rhs = &pi[*j] * &self.entry(*j, i);
                if lhs != rhs {
                    return Err(Error::NotReversible {
                        a: format!("{:?}", self.space.state(i)),
                        b: format!("{:?}", self.space.state(*j)),
                    });
                }
            }
        }
        Ok(())
    }

    /// The time reversal `P*(x, y) = pi(y) P(y, x) / pi(x)`. Requires `pi`
    /// stationary and strictly positive.
    pub fn time_reversal(&self, pi: &[Rat]) -> Result<Kernel<S>> {
        self.check_stationary(pi)?;
        if pi.iter().any(|p| *p <= Rat::zero()) {
            return Err(Error::InvalidParameter(
                "time reversal needs a strictly positive stationary measure".into(),
            ));
        }
        let mut rows: Vec<Vec<(usize, Rat)>> = vec![Vec::new(); self.n()];
        for y in 0..self.n() {
            for (x, p) in &self.rows[y] {
                rows[*x].push((y, &pi[y] * p / &pi[*x]));
            }
        }
        Kernel::new(self.space.clone(), rows)
    }

    /// The additive symmetrization `(P + P*) / 2`, reversible w.r.t. `pi`.
    pub fn additive_symmetrization(&self, pi: &[Rat]) -> Result<Kernel<S>> {
        let rev = self.time_reversal(pi)?;
        let half = crate::ratio::rat(1, 2);
        Kernel::mixture(&[(half.clone(), self), (half, &rev)])
    }

    /// Solves `pi P = pi`, `sum pi = 1` exactly. Fails on reducible chains
    /// (non-unique or sign-indefinite solutions).
    pub fn stationary_distribution(&self) -> Result<Vec<Rat>> {
        let n = self.n();
        // Transpose of (P - I), with the last equation replaced by the
        // normalization sum(pi) = 1.
        let mut a = vec![vec![Rat::zero(); n]; n];
        for i in 0..n {
            for (j, p) in &self.rows[i] {
                if *j < n - 1 || n == 1 {
                    a[*j][i] += p;
                }
            }
            if i < n - 1 {
                a[i][i] -= rone();
            }
        }
        for j in 0..n {
            a[n - 1][j] = rone();
        }
        let b: Vec<Rat> = (0..n)
            .map(|i| if i == n - 1 { rone() } else { Rat::zero() })
            .collect();
        let pi = crate::linalg::solve_exact_vec(&a, &b)?;
        if pi.iter().any(|p| *p < Rat::zero()) {
            return Err(Error::SingularSystem);
        }
        self.check_stationary(&pi)?;
        Ok(pi)
    }

    /// Watching the chain only while it is in `keep`: the induced (censored)
    /// chain `Q = P_AA + P_AC (I - P_CC)^{-1} P_CA` on the listed states, in
    /// the listed order. Fails when the complement can trap the chain.
    pub fn induced_on(&self, keep: &[usize]) -> Result<Kernel<S>> {
        let n = self.n();
        let mut in_keep = vec![false; n];
        for &i in keep {
            if i >= n {
                return Err(Error::InvalidParameter(format!("state {i} out of range")));
            }
            if in_keep[i] {
                return Err(Error::InvalidParameter("duplicate state in subset".into()));
            }
            in_keep[i] = true;
        }
        if keep.is_empty() {
            return Err(Error::InvalidParameter("empty subset".into()));
        }
        let comp: Vec<usize> = (0..n).filter(|&i| !in_keep[i]).collect();
        let keep_pos: HashMap<usize, usize> =
            keep.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        let comp_pos: HashMap<usize, usize> =
            comp.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        let (na, nc) = (keep.len(), comp.len());
        let mut q = vec![vec![Rat::zero(); na]; na];
        for (pa, &i) in keep.iter().enumerate() {
            for (j, p) in &self.rows[i] {
                if let Some(&pb) = keep_pos.get(j) {
                    q[pa][pb] += p;
                }
            }
        }
        if nc > 0 {
            // X = (I - P_CC)^{-1} P_CA, solved exactly with one RHS column
            // per kept state.
            let mut lhs = vec![vec![Rat::zero(); nc]; nc];
            let mut rhs = vec![vec![Rat::zero(); na]; nc];
            for (pc, &i) in comp.iter().enumerate() {
                lhs[pc][pc] = rone();
                for (j, p) in &self.rows[i] {
                    if let Some(&pd) = comp_pos.get(j) {
                        lhs[pc][pd] -= p;
                    }
                    if let Some(&pb) = keep_pos.get(j) {
                        rhs[pc][pb] += p;
                    }
                }
            }
            let x = solve_exact(&lhs, &rhs)?;
            for (pa, &i) in keep.iter().enumerate() {
                for (j, p) in &self.rows[i] {
                    if let Some(&pc) = comp_pos.get(j) {
                        for pb in 0..na {
                            q[pa][pb] += p * &x[pc][pb];
                        }
                    }
                }
            }
        }
        let sub_space = Rc::new(StateSpace::new(
            keep.iter().map(|&i| self.space.state(i).clone()).collect(),
        )?);
        let rows = q
            .into_iter()
            .map(|r| r.into_iter().enumerate().filter(|(_, p)| !p.is_zero()).collect())
            .collect();
        Kernel::new(sub_space, rows)
    }

    /// Quotient by a partition when the kernel is strongly lumpable: the
    /// summed transition into each block must not depend on the
    /// representative. Block ids must be contiguous from 0.
    pub fn lump_strong(&self, class_of: &[usize]) -> Result<Kernel<usize>> {
        if class_of.len() != self.n() {
            return Err(Error::InvalidParameter(
                "partition must assign every state a block".into(),
            ));
        }
        let nb = class_of.iter().copied().max().map_or(0, |m| m + 1);
        let mut rows: Vec<Option<Vec<(usize, Rat)>>> = vec![None; nb];
        for i in 0..self.n() {
            let mut acc = vec![Rat::zero(); nb];
            for (j, p) in &self.rows[i] {
                acc[class_of[*j]] += p;
            }
            let row: Vec<(usize, Rat)> = acc
                .into_iter()
                .enumerate()
                .filter(|(_, p)| !p.is_zero())
                .collect();
            match &rows[class_of[i]] {
                None => rows[class_of[i]] = Some(row),
                Some(prev) if *prev == row => {}
                Some(_) => {
                    return Err(Error::InvalidParameter(format!(
                        "not strongly lumpable: block {} rows disagree at state {:?}",
                        class_of[i],
                        self.space.state(i)
                    )))
                }
            }
        }
        let space = Rc::new(StateSpace::new((0..nb).collect())?);
        let rows = rows
            .into_iter()
            .map(|r| r.ok_or_else(|| Error::InvalidParameter("empty block".into())))
            .collect::<Result<Vec<_>>>()?;
        Kernel::new(space, rows)
    }

    /// Sparse triplet export: a commented header listing state labels, then
    /// one `row col p/q` line per nonzero entry.
    pub fn export_sparse(&self, label: impl Fn(&S) -> String) -> String {
        let mut out = String::new();
        out.push_str(&format!("# states {}\n", self.n()));
        for (i, s) in self.space.iter() {
            out.push_str(&format!("# {} {}\n", i, label(s)));
        }
        for (i, row) in self.rows.iter().enumerate() {
            for (j, p) in row {
                out.push_str(&format!("{} {} {}\n", i, j, format_rat(p)));
            }
        }
        out
    }
}

/// Measure export in `index value` lines with a labeled header.
pub fn export_measure<S: Eq + Hash + Clone>(
    space: &StateSpace<S>,
    mu: &[Rat],
    label: impl Fn(&S) -> String,
) -> String {
    let mut out = String::new();
    out.push_str(&format!("# states {}\n", space.len()));
    for (i, s) in space.iter() {
        out.push_str(&format!("# {} {}\n", i, label(s)));
    }
    for (i, v) in mu.iter().enumerate() {
        out.push_str(&format!("{} {}\n", i, format_rat(v)));
    }
    out
}

pub fn uniform_measure(n: usize) -> Vec<Rat> {
    vec![Rat::new(1.into(), (n as i64).into()); n]
}

pub fn delta_measure(n: usize, at: usize) -> Vec<Rat> {
    let mut mu = vec![Rat::zero(); n];
    mu[at] = rone();
    mu
}

/// Floating-point mirror of a kernel for Monte-Carlo and large solves.
#[derive(Clone, Debug)]
pub struct FloatKernel {
    pub n: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl FloatKernel {
    pub fn measure_step(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, m) in mu.iter().enumerate() {
            if *m == 0.0 {
                continue;
            }
            for &(j, p) in &self.rows[i] {
                out[j] += m * p;
            }
        }
        out
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .iter()
            .find(|&&(c, _)| c == j)
            .map_or(0.0, |&(_, p)| p)
    }
}

/// Hitting probabilities of the renewal walk driven by step weights
/// `(p_0, ..., p_m)`: `q[l]` is the probability that the running sum ever
/// equals `l`, conditioning each step on a strictly positive increment.
#[derive(Clone, Debug)]
pub struct RenewalReport {
    pub q: Vec<Rat>,
    /// gcd of `{j >= 1 : p_j > 0}`.
    pub support_gcd: usize,
}

impl RenewalReport {
    /// Smallest `q[l]` over `l` in `[n0, end of computed range]`.
    pub fn tail_inf(&self, n0: usize) -> Option<&Rat> {
        self.q[n0.min(self.q.len())..].iter().min()
    }
}

pub fn renewal_hitting(weights: &[Rat], l: usize) -> Result<RenewalReport> {
    if weights.is_empty() || weights.iter().any(|w| *w < Rat::zero()) {
        return Err(Error::InvalidParameter(
            "weights must be a nonempty nonnegative vector".into(),
        ));
    }
    let total: Rat = weights.iter().sum();
    if !total.is_one() {
        return Err(Error::InvalidParameter("weights must sum to 1".into()));
    }
    let support: Vec<usize> = (1..weights.len()).filter(|&j| !weights[j].is_zero()).collect();
    if support.is_empty() {
        return Err(Error::InvalidParameter(
            "all weight at increment 0: the walk never moves".into(),
        ));
    }
    let support_gcd = support.iter().fold(0usize, |g, &j| g.gcd(&j));
    let stay = &weights[0];
    let move_mass = rone() - stay;
    let cond: Vec<Rat> = weights.iter().map(|w| w / &move_mass).collect();
    let mut q = vec![Rat::zero(); l + 1];
    q[0] = rone();
    for ell in 1..=l {
        let mut acc = Rat::zero();
        for j in 1..cond.len().min(ell + 1) {
            if !cond[j].is_zero() {
                acc += &cond[j] * &q[ell - j];
            }
        }
        q[ell] = acc;
    }
    Ok(RenewalReport { q, support_gcd })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::rat;

    fn two_state() -> Kernel<usize> {
        let sp = Rc::new(StateSpace::new(vec![0usize, 1]).unwrap());
        Kernel::new(
            sp,
            vec![
                vec![(0, rat(1, 3)), (1, rat(2, 3))],
                vec![(0, rat(1, 2)), (1, rat(1, 2))],
            ],
        )
        .unwrap()
    }

    #[test]
    fn rows_must_sum_to_one() {
        let sp = Rc::new(StateSpace::new(vec![0usize, 1]).unwrap());
        let bad = Kernel::new(sp, vec![vec![(0, rat(1, 2))], vec![(1, rone())]]);
        assert!(bad.is_err());
    }

    #[test]
    fn stationary_solve_matches_hand_value() {
        let k = two_state();
        let pi = k.stationary_distribution().unwrap();
        // Balance: pi_0 * 2/3 = pi_1 * 1/2 with pi_0 + pi_1 = 1.
        assert_eq!(pi, vec![rat(3, 7), rat(4, 7)]);
        k.check_stationary(&pi).unwrap();
    }

    #[test]
    fn reversal_is_involutive() {
        let k = two_state();
        let pi = k.stationary_distribution().unwrap();
        let rev = k.time_reversal(&pi).unwrap();
        let back = rev.time_reversal(&pi).unwrap();
        for i in 0..2 {
            assert_eq!(k.row(i), back.row(i));
        }
    }

    #[test]
    fn symmetrization_is_reversible() {
        let k = two_state();
        let pi = k.stationary_distribution().unwrap();
        let s = k.additive_symmetrization(&pi).unwrap();
        s.check_reversible(&pi).unwrap();
        s.check_stationary(&pi).unwrap();
    }

    #[test]
    fn induced_chain_collapses_a_relay_state() {
        // 0 -> 2 via relay 1: watching {0, 2} only, the relay disappears.
        let sp = Rc::new(StateSpace::new(vec![0usize, 1, 2]).unwrap());
        let k = Kernel::new(
            sp,
            vec![
                vec![(1, rone())],
                vec![(0, rat(1, 2)), (2, rat(1, 2))],
                vec![(2, rone())],
            ],
        )
        .unwrap();
        let q = k.induced_on(&[0, 2]).unwrap();
        // From 0: enter the relay, then a geometric number of bounces back.
        // Overall: half the mass returns to 0, half reaches 2.
        assert_eq!(q.entry(0, 0), rat(1, 2));
        assert_eq!(q.entry(0, 1), rat(1, 2));
        assert_eq!(q.entry(1, 1), rone());
    }

    #[test]
    fn renewal_recursion_hand_values() {
        let r = renewal_hitting(&[Rat::zero(), rat(1, 2), rat(1, 2)], 4).unwrap();
        assert_eq!(r.q[1], rat(1, 2));
        assert_eq!(r.q[2], rat(3, 4));
        assert_eq!(r.support_gcd, 1);
        let even = renewal_hitting(&[Rat::zero(), Rat::zero(), rone()], 5).unwrap();
        assert_eq!(even.q, vec![rone(), Rat::zero(), rone(), Rat::zero(), rone(), Rat::zero()]);
        assert_eq!(even.support_gcd, 2);
    }

    #[test]
    fn average_of_powers_on_two_cycle() {
        let sp = Rc::new(StateSpace::new(vec![0usize, 1]).unwrap());
        let flip = Kernel::new(sp, vec![vec![(1, rone())], vec![(0, rone())]]).unwrap();
        let d = flip.average_of_powers(2);
        // (I + P + P^2) / 3 on the 2-cycle: diagonal 2/3, off-diagonal 1/3.
        assert_eq!(d.entry(0, 0), rat(2, 3));
        assert_eq!(d.entry(0, 1), rat(1, 3));
        assert!(d.is_doubly_stochastic());
    }
}
