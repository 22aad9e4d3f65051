use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Rat, StepFn, TimeFnError};

/// A continuous piecewise-linear function: linear between knots, constant
/// outside the knot range.
///
/// The knot list is non-empty with strictly increasing times and is kept
/// canonical (no collinear interior knots, no redundant flat end knots), so
/// structural equality is exact function equality.
#[derive(Clone, PartialEq, Eq)]
pub struct PwlFn {
    knots: Vec<(Rat, Rat)>,
}

impl PwlFn {
    pub fn constant(v: Rat) -> Self {
        PwlFn {
            knots: vec![(Rat::zero(), v)],
        }
    }

    /// The identity map on `[a, b]` (flat outside, like every `PwlFn`).
    pub fn identity_on(a: Rat, b: Rat) -> Self {
        assert!(a < b, "identity_on needs a < b");
        PwlFn {
            knots: vec![(a.clone(), a), (b.clone(), b)],
        }
    }

    /// Validates knot times and canonicalizes.
    pub fn new(knots: Vec<(Rat, Rat)>) -> Result<Self, TimeFnError> {
        if knots.is_empty() {
            return Err(TimeFnError::Empty);
        }
        for (i, w) in knots.windows(2).enumerate() {
            if w[0].0 >= w[1].0 {
                return Err(TimeFnError::NotIncreasing(i + 1));
            }
        }
        let mut f = PwlFn { knots };
        f.canonicalize();
        Ok(f)
    }

    fn canonicalize(&mut self) {
        let mut out: Vec<(Rat, Rat)> = Vec::with_capacity(self.knots.len());
        for knot in self.knots.drain(..) {
            while out.len() >= 2 {
                let a = &out[out.len() - 2];
                let b = &out[out.len() - 1];
                // b is redundant if (a, b, knot) are collinear:
                // (b.v - a.v) * (knot.t - b.t) == (knot.v - b.v) * (b.t - a.t)
                let lhs = (&b.1 - &a.1) * (&knot.0 - &b.0);
                let rhs = (&knot.1 - &b.1) * (&b.0 - &a.0);
                if lhs == rhs {
                    out.pop();
                } else {
                    break;
                }
            }
            out.push(knot);
        }
        // Flat first/last segments are implied by constant extension.
        while out.len() >= 2 && out[0].1 == out[1].1 {
            out.remove(0);
        }
        while out.len() >= 2 && out[out.len() - 1].1 == out[out.len() - 2].1 {
            out.pop();
        }
        if out.len() == 1 && !out[0].0.is_zero() {
            out[0].0 = Rat::zero();
        }
        self.knots = out;
    }

    pub fn knots(&self) -> &[(Rat, Rat)] {
        &self.knots
    }

    pub fn is_constant(&self) -> Option<&Rat> {
        if self.knots.len() == 1 {
            Some(&self.knots[0].1)
        } else {
            None
        }
    }

    pub fn first_knot(&self) -> &(Rat, Rat) {
        &self.knots[0]
    }

    pub fn last_knot(&self) -> &(Rat, Rat) {
        self.knots.last().unwrap()
    }

    /// Evaluation with constant extension outside the knot range.
    pub fn eval(&self, t: &Rat) -> Rat {
        let k = &self.knots;
        if *t <= k[0].0 {
            return k[0].1.clone();
        }
        if *t >= k[k.len() - 1].0 {
            return k[k.len() - 1].1.clone();
        }
        let i = match k.binary_search_by(|(kt, _)| kt.cmp(t)) {
            Ok(i) => return k[i].1.clone(),
            Err(i) => i,
        };
        let (t0, v0) = &k[i - 1];
        let (t1, v1) = &k[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Pointwise combination on the merged knot grid. Exact for operations
    /// that preserve linearity on each merged segment (sum, difference,
    /// affine maps); for min/max use [`PwlFn::min_with`] / [`PwlFn::max_with`].
    fn zip_linear(&self, other: &PwlFn, op: impl Fn(&Rat, &Rat) -> Rat) -> PwlFn {
        let mut grid: Vec<Rat> = self
            .knots
            .iter()
            .chain(other.knots.iter())
            .map(|(t, _)| t.clone())
            .collect();
        grid.sort();
        grid.dedup();
        let knots = grid
            .into_iter()
            .map(|t| {
                let v = op(&self.eval(&t), &other.eval(&t));
                (t, v)
            })
            .collect();
        PwlFn::new(knots).expect("merged grid is increasing")
    }

    pub fn add(&self, other: &PwlFn) -> PwlFn {
        self.zip_linear(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &PwlFn) -> PwlFn {
        self.zip_linear(other, |a, b| a - b)
    }

    pub fn scale(&self, k: &Rat) -> PwlFn {
        PwlFn::new(
            self.knots
                .iter()
                .map(|(t, v)| (t.clone(), v * k))
                .collect(),
        )
        .expect("times unchanged")
    }

    pub fn neg(&self) -> PwlFn {
        self.scale(&-Rat::one())
    }

    pub fn add_const(&self, c: &Rat) -> PwlFn {
        PwlFn::new(
            self.knots
                .iter()
                .map(|(t, v)| (t.clone(), v + c))
                .collect(),
        )
        .expect("times unchanged")
    }

    /// `g(t) = f(t - delta)`.
    pub fn shift_time(&self, delta: &Rat) -> PwlFn {
        PwlFn::new(
            self.knots
                .iter()
                .map(|(t, v)| (t + delta, v.clone()))
                .collect(),
        )
        .expect("times shifted uniformly")
    }

    /// Times in `(a, b)` where `self - other` crosses zero strictly inside a
    /// merged segment.
    fn crossings_with(&self, other: &PwlFn) -> Vec<Rat> {
        let diff = self.sub(other);
        let mut out = Vec::new();
        for w in diff.knots.windows(2) {
            let (t0, v0) = &w[0];
            let (t1, v1) = &w[1];
            if (v0.is_positive() && v1.is_negative()) || (v0.is_negative() && v1.is_positive()) {
                // root of the linear segment
                let t = t0 + (t1 - t0) * v0 / (v0 - v1);
                out.push(t);
            }
        }
        out
    }

    pub fn min_with(&self, other: &PwlFn) -> PwlFn {
        let mut grid: Vec<Rat> = self
            .knots
            .iter()
            .chain(other.knots.iter())
            .map(|(t, _)| t.clone())
            .collect();
        grid.extend(self.crossings_with(other));
        grid.sort();
        grid.dedup();
        PwlFn::new(
            grid.into_iter()
                .map(|t| {
                    let v = self.eval(&t).min(other.eval(&t));
                    (t, v)
                })
                .collect(),
        )
        .expect("grid increasing")
    }

    pub fn max_with(&self, other: &PwlFn) -> PwlFn {
        let mut grid: Vec<Rat> = self
            .knots
            .iter()
            .chain(other.knots.iter())
            .map(|(t, _)| t.clone())
            .collect();
        grid.extend(self.crossings_with(other));
        grid.sort();
        grid.dedup();
        PwlFn::new(
            grid.into_iter()
                .map(|t| {
                    let v = self.eval(&t).max(other.eval(&t));
                    (t, v)
                })
                .collect(),
        )
        .expect("grid increasing")
    }

    /// `max(self, 0)` pointwise.
    pub fn clamp_min_zero(&self) -> PwlFn {
        self.max_with(&PwlFn::constant(Rat::zero()))
    }

    /// `min(self, m)` pointwise.
    pub fn truncate_above(&self, m: &Rat) -> PwlFn {
        self.min_with(&PwlFn::constant(m.clone()))
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.knots.windows(2).all(|w| w[0].1 <= w[1].1)
    }

    /// Strict monotonicity over `[a, b]`. The constant extensions outside the
    /// knot range are flat, so any overlap of `[a, b]` with them fails.
    pub fn is_strictly_increasing_on(&self, a: &Rat, b: &Rat) -> bool {
        if a >= b {
            return true;
        }
        if self.knots.len() == 1 {
            return false;
        }
        let lo = &self.knots[0].0;
        let hi = &self.knots[self.knots.len() - 1].0;
        if a < lo || b > hi {
            return false;
        }
        for w in self.knots.windows(2) {
            let seg_lo = w[0].0.clone().max(a.clone());
            let seg_hi = w[1].0.clone().min(b.clone());
            if seg_lo < seg_hi && w[0].1 >= w[1].1 {
                return false;
            }
        }
        true
    }

    /// Compose `self` after `inner` (`t -> self(inner(t))`).
    /// `inner` must be nondecreasing.
    pub fn compose(&self, inner: &PwlFn) -> PwlFn {
        assert!(
            inner.is_nondecreasing(),
            "compose requires a nondecreasing inner function"
        );
        let mut grid: Vec<Rat> = inner.knots.iter().map(|(t, _)| t.clone()).collect();
        // Add preimages of self's knot times so every sampled segment maps
        // into a single linear piece of self.
        for (x, _) in &self.knots {
            if let Some(t) = inner.earliest_preimage(x) {
                grid.push(t);
            }
        }
        grid.sort();
        grid.dedup();
        PwlFn::new(
            grid.into_iter()
                .map(|t| {
                    let v = self.eval(&inner.eval(&t));
                    (t, v)
                })
                .collect(),
        )
        .expect("grid increasing")
    }

    /// Earliest `t` with `self(t) = x`, for nondecreasing `self`. `None` when
    /// `x` is outside the value range.
    pub fn earliest_preimage(&self, x: &Rat) -> Option<Rat> {
        let k = &self.knots;
        if *x < k[0].1 || *x > k[k.len() - 1].1 {
            return None;
        }
        if *x == k[0].1 {
            return Some(k[0].0.clone());
        }
        for w in k.windows(2) {
            let (t0, v0) = &w[0];
            let (t1, v1) = &w[1];
            if v0 < x && x <= v1 {
                return Some(t0 + (t1 - t0) * (x - v0) / (v1 - v0));
            }
        }
        None
    }

    /// Inverse of a strictly increasing function (knot roles swapped).
    /// Fails if any segment is flat or decreasing.
    pub fn invert_monotone(&self) -> Result<PwlFn, TimeFnError> {
        if self.knots.len() < 2 {
            return Err(TimeFnError::NotMonotone("function is constant".into()));
        }
        for w in self.knots.windows(2) {
            if w[0].1 >= w[1].1 {
                return Err(TimeFnError::NotMonotone(format!(
                    "segment [{}, {}] is not strictly increasing",
                    w[0].0, w[1].0
                )));
            }
        }
        PwlFn::new(self.knots.iter().map(|(t, v)| (v.clone(), t.clone())).collect())
    }

    /// Exact integral over `[a, b]` (constant extension included).
    pub fn integrate(&self, a: &Rat, b: &Rat) -> Rat {
        assert!(a <= b, "integrate needs a <= b");
        if a == b {
            return Rat::zero();
        }
        let mut cuts: Vec<Rat> = vec![a.clone()];
        for (t, _) in &self.knots {
            if t > a && t < b {
                cuts.push(t.clone());
            }
        }
        cuts.push(b.clone());
        let two = Rat::from(2);
        let mut acc = Rat::zero();
        for w in cuts.windows(2) {
            let va = self.eval(&w[0]);
            let vb = self.eval(&w[1]);
            acc += (va + vb) * (&w[1] - &w[0]) / &two;
        }
        acc
    }

    /// Maximum over the closed interval `[a, b]` with its earliest witness time.
    pub fn max_over_with_arg(&self, a: &Rat, b: &Rat) -> (Rat, Rat) {
        assert!(a <= b, "max_over needs a <= b");
        let mut best_t = a.clone();
        let mut best_v = self.eval(a);
        for (t, v) in &self.knots {
            if t > a && t < b && *v > best_v {
                best_t = t.clone();
                best_v = v.clone();
            }
        }
        let vb = self.eval(b);
        if vb > best_v {
            best_t = b.clone();
            best_v = vb;
        }
        (best_t, best_v)
    }

    pub fn max_over(&self, a: &Rat, b: &Rat) -> Rat {
        self.max_over_with_arg(a, b).1
    }

    pub fn min_over(&self, a: &Rat, b: &Rat) -> Rat {
        self.neg().max_over(a, b) * -Rat::one()
    }

    /// Global maximum (the constant extensions cannot exceed knot values).
    pub fn global_max(&self) -> Rat {
        self.knots
            .iter()
            .map(|(_, v)| v.clone())
            .max()
            .expect("non-empty")
    }

    pub fn global_min(&self) -> Rat {
        self.knots
            .iter()
            .map(|(_, v)| v.clone())
            .min()
            .expect("non-empty")
    }

    /// Earliest `t` in `[a, b]` with `self(t) > other(t)`, if any.
    pub fn first_time_above(&self, other: &PwlFn, a: &Rat, b: &Rat) -> Option<Rat> {
        let diff = self.sub(other);
        let mut cuts: Vec<Rat> = vec![a.clone()];
        for (t, _) in &diff.knots {
            if t > a && t < b {
                cuts.push(t.clone());
            }
        }
        cuts.push(b.clone());
        for w in cuts.windows(2) {
            let (t0, t1) = (&w[0], &w[1]);
            let v0 = diff.eval(t0);
            if v0.is_positive() {
                return Some(t0.clone());
            }
            let v1 = diff.eval(t1);
            if v1.is_positive() {
                // crosses zero inside the segment; the crossing itself has
                // value 0, so the supremum set starts right at the root
                let root = t0 + (t1 - t0) * &v0 / (&v0 - &v1);
                return Some(if v0.is_zero() { t0.clone() } else { root });
            }
        }
        let vb = diff.eval(b);
        if vb.is_positive() {
            return Some(b.clone());
        }
        None
    }
}

/// Exact inner product `integral over [a, b] of f(t) * g(t) dt` of a step
/// function with a piecewise-linear function.
pub fn integrate_step_times_pwl(f: &StepFn, g: &PwlFn, a: &Rat, b: &Rat) -> Rat {
    assert!(a <= b, "integrate needs a <= b");
    let mut cuts: Vec<Rat> = Vec::new();
    cuts.push(a.clone());
    for t in f.breakpoints() {
        if t > a && t < b {
            cuts.push(t.clone());
        }
    }
    for (t, _) in g.knots() {
        if t > a && t < b {
            cuts.push(t.clone());
        }
    }
    cuts.push(b.clone());
    cuts.sort();
    cuts.dedup();
    let two = Rat::from(2);
    let mut acc = Rat::zero();
    for w in cuts.windows(2) {
        let c = f.eval(&w[0]);
        if c.is_zero() {
            continue;
        }
        let avg = (g.eval(&w[0]) + g.eval(&w[1])) / &two;
        acc += c * avg * (&w[1] - &w[0]);
    }
    acc
}

impl std::fmt::Debug for PwlFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PwlFn(")?;
        for (i, (t, v)) in self.knots.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({t},{v})")?;
        }
        write!(f, ")")
    }
}

impl Serialize for PwlFn {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Raw<'a> {
            knots: Vec<(&'a Rat, &'a Rat)>,
        }
        Raw {
            knots: self.knots.iter().map(|(t, v)| (t, v)).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PwlFn {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            knots: Vec<(Rat, Rat)>,
        }
        let raw = Raw::deserialize(deserializer)?;
        PwlFn::new(raw.knots).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    fn pwl(knots: &[(i64, i64)]) -> PwlFn {
        PwlFn::new(knots.iter().map(|(t, v)| (rat!(*t), rat!(*v))).collect()).unwrap()
    }

    #[test]
    fn eval_interpolates_and_extends() {
        let f = pwl(&[(0, 0), (2, 4), (6, 0)]);
        assert_eq!(f.eval(&rat!(4)), rat!(2));
        assert_eq!(f.eval(&rat!(1)), rat!(2));
        assert_eq!(f.eval(&rat!(-5)), rat!(0));
        assert_eq!(f.eval(&rat!(10)), rat!(0));
        assert_eq!(f.eval(&rat!(2)), rat!(4));
    }

    #[test]
    fn canonical_drops_collinear_knots() {
        let f = PwlFn::new(vec![
            (rat!(0), rat!(0)),
            (rat!(1), rat!(1)),
            (rat!(2), rat!(2)),
            (rat!(3), rat!(1)),
        ])
        .unwrap();
        assert_eq!(f.knots().len(), 3);
        assert_eq!(f, pwl(&[(0, 0), (2, 2), (3, 1)]));
    }

    #[test]
    fn invert_swaps_coordinates() {
        let f = pwl(&[(0, 2), (2, 6)]);
        let inv = f.invert_monotone().unwrap();
        assert_eq!(inv, pwl(&[(2, 0), (6, 2)]));
        let id = pwl(&[(0, 0), (1, 1)]);
        assert_eq!(id.invert_monotone().unwrap(), id);
        let g = pwl(&[(0, 0), (1, 2)]);
        assert_eq!(g.invert_monotone().unwrap(), pwl(&[(0, 0), (2, 1)]));
        assert!(pwl(&[(0, 1), (1, 1)]).invert_monotone().is_err());
        assert!(pwl(&[(0, 1), (1, 0)]).invert_monotone().is_err());
    }

    #[test]
    fn double_inversion_is_identity() {
        let f = pwl(&[(0, 1), (1, 3), (4, 10)]);
        assert_eq!(f.invert_monotone().unwrap().invert_monotone().unwrap(), f);
    }

    #[test]
    fn compose_tracks_inner_knots_and_preimages() {
        let inner = pwl(&[(0, 0), (2, 4)]);
        let outer = pwl(&[(0, 0), (2, 2), (4, 2)]);
        let c = outer.compose(&inner);
        assert_eq!(c.eval(&rat!(0)), rat!(0));
        assert_eq!(c.eval(&Rat::new(1, 2)), rat!(1));
        assert_eq!(c.eval(&rat!(1)), rat!(2));
        assert_eq!(c.eval(&rat!(2)), rat!(2));
    }

    #[test]
    fn min_max_insert_crossings() {
        let f = pwl(&[(0, 0), (4, 4)]);
        let g = PwlFn::constant(rat!(2));
        let m = f.min_with(&g);
        assert_eq!(m.eval(&rat!(1)), rat!(1));
        assert_eq!(m.eval(&rat!(2)), rat!(2));
        assert_eq!(m.eval(&rat!(3)), rat!(2));
        assert!(m.knots().iter().any(|(t, _)| *t == rat!(2)));
        let clipped = pwl(&[(0, 1), (1, 7)]).truncate_above(&rat!(4));
        assert_eq!(
            clipped,
            PwlFn::new(vec![
                (rat!(0), rat!(1)),
                (Rat::new(1, 2), rat!(4)),
                (rat!(1), rat!(4)),
            ])
            .unwrap()
        );
    }

    #[test]
    fn integral_is_exact() {
        let f = pwl(&[(0, 0), (2, 4), (6, 0)]);
        assert_eq!(f.integrate(&rat!(0), &rat!(6)), rat!(12));
        assert_eq!(f.integrate(&rat!(-2), &rat!(0)), rat!(0));
        assert_eq!(f.integrate(&rat!(1), &rat!(2)), rat!(3));
    }

    #[test]
    fn step_pwl_inner_product() {
        let f = StepFn::constant(rat!(0), rat!(2), rat!(2));
        let g = pwl(&[(0, 0), (2, 4)]);
        assert_eq!(
            integrate_step_times_pwl(&f, &g, &rat!(0), &rat!(2)),
            rat!(8)
        );
    }

    #[test]
    fn first_time_above_finds_exact_crossing() {
        let f = pwl(&[(0, 0), (4, 4)]);
        let cap = PwlFn::constant(rat!(2));
        assert_eq!(f.first_time_above(&cap, &rat!(0), &rat!(4)), Some(rat!(2)));
        assert_eq!(f.first_time_above(&cap, &rat!(3), &rat!(4)), Some(rat!(3)));
        assert_eq!(cap.first_time_above(&f, &rat!(3), &rat!(4)), None);
    }

    #[test]
    fn strictness_checks() {
        let f = pwl(&[(0, 0), (2, 2), (3, 2), (4, 5)]);
        assert!(f.is_nondecreasing());
        assert!(!f.is_strictly_increasing_on(&rat!(0), &rat!(4)));
        assert!(f.is_strictly_increasing_on(&rat!(0), &rat!(2)));
        assert!(f.is_strictly_increasing_on(&rat!(3), &rat!(4)));
    }
}
