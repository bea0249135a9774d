//! Closed convex feasible sets and Euclidean projection onto them.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};

use super::decision::block_ranges;
use crate::error::{Error, Result};

/// Default tolerance on the movement of one Dykstra cycle.
pub const DYKSTRA_TOL: f64 = 1e-10;
const DYKSTRA_MAX_CYCLES: usize = 200_000;

/// Axis-aligned box `{x : lower <= x <= upper}`. Infinite bounds are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl BoxSet {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        if lower.iter().chain(upper.iter()).any(|v| v.is_nan()) {
            return Err(Error::NonFinite("box bounds"));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::InfeasibleSet("box with lower > upper".into()));
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[lo, hi]^n`.
    pub fn uniform(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(DVector::from_element(n, lo), DVector::from_element(n, hi))
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    fn clamp_into(&self, src: &[f64], dst: &mut [f64]) {
        for (i, (d, s)) in dst.iter_mut().zip(src).enumerate() {
            *d = s.max(self.lower[i]).min(self.upper[i]);
        }
    }

    fn violation(&self, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, v)| (self.lower[i] - v).max(v - self.upper[i]).max(0.0))
            .fold(0.0, f64::max)
    }

    fn diameter_sq(&self) -> Option<f64> {
        let d2 = (&self.upper - &self.lower).norm_squared();
        d2.is_finite().then_some(d2)
    }
}

/// The polyhedron `{x : A x <= b, x >= 0}`.
///
/// Projection uses Dykstra's alternating projections over the halfspaces
/// `a_l^T x <= b_l` and the nonnegative orthant.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    a: DMatrix<f64>,
    b: DVector<f64>,
    row_norms_sq: Vec<f64>,
    tol: f64,
    max_cycles: usize,
}

impl Polyhedron {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                actual: b.len(),
            });
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("polyhedron data"));
        }
        // 0 must be feasible
        if b.iter().any(|&v| v < 0.0) {
            return Err(Error::InfeasibleSet(
                "capacity vector has a negative entry, so 0 is infeasible".into(),
            ));
        }
        let row_norms_sq = a.row_iter().map(|r| r.norm_squared()).collect();
        Ok(Self {
            a,
            b,
            row_norms_sq,
            tol: DYKSTRA_TOL,
            max_cycles: DYKSTRA_MAX_CYCLES,
        })
    }

    /// Overrides the Dykstra stopping tolerance.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn capacities(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn violation(&self, x: &DVector<f64>) -> f64 {
        let ax = &self.a * x;
        let cap = ax
            .iter()
            .zip(self.b.iter())
            .map(|(v, b)| (v - b).max(0.0))
            .fold(0.0, f64::max);
        x.iter().map(|v| (-v).max(0.0)).fold(cap, f64::max)
    }

    /// Per-coordinate upper bounds implied by the rows with positive entries,
    /// or `None` when some coordinate is unbounded or `A` has negative entries.
    pub fn box_hull_upper(&self) -> Option<DVector<f64>> {
        if self.a.iter().any(|&v| v < 0.0) {
            return None;
        }
        let mut u = DVector::from_element(self.dim(), f64::INFINITY);
        for (l, row) in self.a.row_iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                if a > 0.0 {
                    u[j] = u[j].min(self.b[l] / a);
                }
            }
        }
        u.iter().all(|v| v.is_finite()).then_some(u)
    }

    /// Violation attributable to rounding in `A x`.
    fn rounding_slack(&self) -> f64 {
        1e-14 * (1.0 + self.b.amax())
    }

    /// Replaces the Dykstra iterate `x` by the exact projection onto the
    /// face it identifies, when that point satisfies the KKT conditions.
    /// Otherwise `x` is returned unchanged.
    fn polish(&self, p: &DVector<f64>, x: DVector<f64>) -> DVector<f64> {
        const ACTIVE: f64 = 1e-9;
        let scale = 1.0 + self.b.amax();
        let ax = &self.a * &x;
        let rows: Vec<usize> = (0..self.a.nrows())
            .filter(|&l| self.row_norms_sq[l] > 0.0 && ax[l] >= self.b[l] - ACTIVE * scale)
            .collect();
        let free: Vec<usize> = (0..self.dim()).filter(|&j| x[j] > ACTIVE * scale).collect();

        let mut y = DVector::zeros(self.dim());
        for &j in &free {
            y[j] = p[j];
        }
        let mut lambda = DVector::zeros(rows.len());
        if !rows.is_empty() {
            let g = DMatrix::from_fn(rows.len(), free.len(), |i, k| self.a[(rows[i], free[k])]);
            let pf = DVector::from_fn(free.len(), |k, _| p[free[k]]);
            let rhs = &g * &pf - DVector::from_fn(rows.len(), |i, _| self.b[rows[i]]);
            let Some(inv) = (&g * g.transpose()).try_inverse() else {
                return x;
            };
            lambda = inv * rhs;
            let yf = pf - g.transpose() * &lambda;
            for (k, &j) in free.iter().enumerate() {
                y[j] = yf[k];
            }
        }

        // multipliers of the active rows and of the coordinates held at 0
        let mut pull = DVector::zeros(self.dim());
        for (i, &l) in rows.iter().enumerate() {
            pull += self.a.row(l).transpose() * lambda[i];
        }
        let kkt = lambda.iter().all(|&v| v >= -ACTIVE)
            && (0..self.dim()).all(|j| free.contains(&j) || pull[j] - p[j] >= -ACTIVE * scale)
            && self.violation(&y) <= ACTIVE * scale
            && (&y - &x).amax() <= 1e-6 * scale;
        if kkt {
            // clear the rounding left on the free coordinates
            y.apply(|v| *v = v.max(0.0));
            y
        } else {
            x
        }
    }

    fn project(&self, p: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.dim();
        // X lies inside the orthant, so a feasible orthant projection is exact.
        let clamped = p.map(|v| v.max(0.0));
        if self.violation(&clamped) <= self.rounding_slack() {
            return Ok(clamped);
        }

        let m = self.a.nrows();
        let mut x = p.clone();
        // Halfspace corrections are multiples of their row, so one scalar each.
        let mut row_incr = vec![0.0; m];
        let mut orthant_incr = DVector::<f64>::zeros(n);
        let tol_sq = self.tol * self.tol;
        let mut change_sq = f64::INFINITY;
        for _ in 0..self.max_cycles {
            change_sq = 0.0;
            for (l, row) in self.a.row_iter().enumerate() {
                let norm_sq = self.row_norms_sq[l];
                if norm_sq == 0.0 {
                    continue;
                }
                let ax: f64 = row.iter().zip(x.iter()).map(|(a, v)| a * v).sum();
                let s_old = row_incr[l];
                let s_new = ((ax - self.b[l]) / norm_sq + s_old).max(0.0);
                let step = s_old - s_new;
                if step != 0.0 {
                    for (xj, a) in x.iter_mut().zip(row.iter()) {
                        *xj += step * a;
                    }
                    change_sq += step * step * norm_sq;
                }
                row_incr[l] = s_new;
            }
            for (xj, q) in x.iter_mut().zip(orthant_incr.iter_mut()) {
                let y = *xj + *q;
                let new = y.max(0.0);
                change_sq += (new - *xj) * (new - *xj);
                *q = y - new;
                *xj = new;
            }
            if change_sq <= tol_sq {
                return Ok(self.polish(p, x));
            }
        }
        Err(Error::ProjectionNotConverged {
            cycles: self.max_cycles,
            change: change_sq.sqrt(),
        })
    }
}

/// A closed convex feasible set.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    Box(BoxSet),
    /// Cartesian product of per-player boxes, in block order.
    ProductOfBoxes(Vec<BoxSet>),
    Polyhedron(Polyhedron),
}

impl FeasibleSet {
    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Box(b) => b.dim(),
            FeasibleSet::ProductOfBoxes(bs) => bs.iter().map(BoxSet::dim).sum(),
            FeasibleSet::Polyhedron(p) => p.dim(),
        }
    }

    /// Euclidean projection of `point` onto the set.
    pub fn project(&self, point: &DVector<f64>) -> Result<DVector<f64>> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: point.len(),
            });
        }
        if point.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("projection input"));
        }
        match self {
            FeasibleSet::Box(b) => {
                let mut out = point.clone();
                b.clamp_into(point.as_slice(), out.as_mut_slice());
                Ok(out)
            }
            FeasibleSet::ProductOfBoxes(bs) => {
                let sizes: Vec<usize> = bs.iter().map(BoxSet::dim).collect();
                let mut out = point.clone();
                for (b, r) in bs.iter().zip(block_ranges(&sizes)) {
                    b.clamp_into(&point.as_slice()[r.clone()], &mut out.as_mut_slice()[r]);
                }
                Ok(out)
            }
            FeasibleSet::Polyhedron(p) => p.project(point),
        }
    }

    /// Largest constraint violation at `x` (0 for feasible points).
    pub fn violation(&self, x: &DVector<f64>) -> f64 {
        match self {
            FeasibleSet::Box(b) => b.violation(x.as_slice()),
            FeasibleSet::ProductOfBoxes(bs) => {
                let sizes: Vec<usize> = bs.iter().map(BoxSet::dim).collect();
                bs.iter()
                    .zip(block_ranges(&sizes))
                    .map(|(b, r)| b.violation(&x.as_slice()[r]))
                    .fold(0.0, f64::max)
            }
            FeasibleSet::Polyhedron(p) => p.violation(x),
        }
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.violation(x) <= tol
    }

    /// Diameter `max ||x - y||` over the set, or an upper bound on it through
    /// the box hull for polyhedra. `None` for unbounded sets.
    pub fn diameter(&self) -> Option<f64> {
        match self {
            FeasibleSet::Box(b) => b.diameter_sq().map(f64::sqrt),
            FeasibleSet::ProductOfBoxes(bs) => bs
                .iter()
                .map(BoxSet::diameter_sq)
                .sum::<Option<f64>>()
                .map(f64::sqrt),
            FeasibleSet::Polyhedron(p) => p.box_hull_upper().map(|u| u.norm()),
        }
    }

    /// Draws a feasible point: uniform on boxes, uniform on the box hull and
    /// then projected for polyhedra.
    pub fn sample_point(&self, rng: &mut dyn RngCore) -> Result<DVector<f64>> {
        let uniform = |lo: &DVector<f64>, hi: &DVector<f64>, rng: &mut dyn RngCore| {
            DVector::from_iterator(
                lo.len(),
                lo.iter().zip(hi.iter()).map(|(&l, &h)| l + (h - l) * rng.random::<f64>()),
            )
        };
        if self.diameter().is_none() {
            return Err(Error::UnboundedSet("cannot sample from an unbounded set"));
        }
        match self {
            FeasibleSet::Box(b) => Ok(uniform(&b.lower, &b.upper, rng)),
            FeasibleSet::ProductOfBoxes(bs) => {
                let parts: Vec<f64> = bs
                    .iter()
                    .flat_map(|b| uniform(&b.lower, &b.upper, rng).iter().copied().collect::<Vec<_>>())
                    .collect();
                Ok(DVector::from_vec(parts))
            }
            FeasibleSet::Polyhedron(p) => {
                let u = p.box_hull_upper().expect("bounded checked above");
                let lo = DVector::zeros(u.len());
                self.project(&uniform(&lo, &u, rng))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use nalgebra::dvector;

    #[test]
    fn box_interior_point_is_fixed() {
        let set = FeasibleSet::Box(BoxSet::uniform(2, 0.0, 1.0).unwrap());
        assert_eq!(set.project(&dvector![0.5, 0.5]).unwrap(), dvector![0.5, 0.5]);
    }

    #[test]
    fn box_clamps() {
        let set = FeasibleSet::Box(BoxSet::uniform(2, 0.0, 1.0).unwrap());
        assert_eq!(set.project(&dvector![2.0, -1.0]).unwrap(), dvector![1.0, 0.0]);
    }

    #[test]
    fn simplex_face_projection() {
        let p = Polyhedron::new(dmatrix![1.0, 1.0], dvector![1.0]).unwrap();
        let x = FeasibleSet::Polyhedron(p).project(&dvector![1.0, 1.0]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-10 && (x[1] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn product_of_boxes_is_blockwise() {
        let set = FeasibleSet::ProductOfBoxes(vec![
            BoxSet::uniform(1, 0.0, 1.0).unwrap(),
            BoxSet::uniform(2, -1.0, 0.0).unwrap(),
        ]);
        assert_eq!(
            set.project(&dvector![3.0, 0.5, -2.0]).unwrap(),
            dvector![1.0, 0.0, -1.0]
        );
        assert!((set.diameter().unwrap() - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn empty_polyhedron_rejected() {
        let err = Polyhedron::new(dmatrix![1.0], dvector![-1.0]).unwrap_err();
        assert!(matches!(err, Error::InfeasibleSet(_)));
    }

    #[test]
    fn non_finite_point_rejected() {
        let set = FeasibleSet::Box(BoxSet::uniform(1, 0.0, 1.0).unwrap());
        assert!(matches!(
            set.project(&dvector![f64::INFINITY]),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            set.project(&dvector![0.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn unbounded_box_has_no_diameter() {
        let b = BoxSet::new(dvector![0.0], dvector![f64::INFINITY]).unwrap();
        assert_eq!(FeasibleSet::Box(b).diameter(), None);
    }

    #[test]
    fn box_hull_of_capacity_polyhedron() {
        let p = Polyhedron::new(dmatrix![1.0, 1.0; 0.0, 2.0], dvector![3.0, 1.0]).unwrap();
        assert_eq!(p.box_hull_upper().unwrap(), dvector![3.0, 0.5]);
    }
}
