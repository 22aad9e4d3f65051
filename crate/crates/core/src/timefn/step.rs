use serde::{Deserialize, Deserializer, Serialize};

use super::{PwlFn, Rat, TimeFnError};

/// A piecewise-constant function of time, zero outside its declared support.
///
/// `values[i]` holds on the half-open interval `[breakpoints[i], breakpoints[i+1])`;
/// evaluation is right-continuous. The representation is kept canonical:
/// adjacent equal levels are merged and zero levels at either end are trimmed,
/// so structural equality is exact function equality.
#[derive(Clone, PartialEq, Eq, Serialize)]
pub struct StepFn {
    breakpoints: Vec<Rat>,
    values: Vec<Rat>,
}

impl StepFn {
    /// The identically-zero function.
    pub fn zero() -> Self {
        StepFn {
            breakpoints: Vec::new(),
            values: Vec::new(),
        }
    }

    /// `value` on `[from, to)`, zero elsewhere. Requires `from < to`.
    pub fn constant(from: Rat, to: Rat, value: Rat) -> Self {
        assert!(from < to, "constant segment needs from < to");
        Self::new(vec![from, to], vec![value]).expect("two increasing breakpoints")
    }

    /// Sum of constant segments `(from, to, value)`; overlaps add up.
    pub fn from_segments(segments: &[(Rat, Rat, Rat)]) -> Self {
        segments
            .iter()
            .filter(|(a, b, _)| a < b)
            .map(|(a, b, v)| Self::constant(a.clone(), b.clone(), v.clone()))
            .fold(Self::zero(), |acc, s| acc.add(&s))
    }

    /// Validates breakpoint monotonicity and the value count, then canonicalizes.
    pub fn new(breakpoints: Vec<Rat>, values: Vec<Rat>) -> Result<Self, TimeFnError> {
        if breakpoints.is_empty() && values.is_empty() {
            return Ok(Self::zero());
        }
        for (i, w) in breakpoints.windows(2).enumerate() {
            if w[0] >= w[1] {
                return Err(TimeFnError::NotIncreasing(i + 1));
            }
        }
        let expected = breakpoints.len().saturating_sub(1);
        if values.len() != expected {
            return Err(TimeFnError::LengthMismatch {
                breakpoints: breakpoints.len(),
                expected,
                got: values.len(),
            });
        }
        let mut f = StepFn {
            breakpoints,
            values,
        };
        f.canonicalize();
        Ok(f)
    }

    fn canonicalize(&mut self) {
        if self.values.is_empty() {
            self.breakpoints.clear();
            return;
        }
        let mut bps = Vec::with_capacity(self.breakpoints.len());
        let mut vals: Vec<Rat> = Vec::with_capacity(self.values.len());
        for i in 0..self.values.len() {
            if vals.last() == Some(&self.values[i]) {
                continue;
            }
            bps.push(self.breakpoints[i].clone());
            vals.push(self.values[i].clone());
        }
        bps.push(self.breakpoints.last().unwrap().clone());
        while vals.first().is_some_and(|v| v.is_zero()) {
            vals.remove(0);
            bps.remove(0);
        }
        while vals.last().is_some_and(|v| v.is_zero()) {
            vals.pop();
            bps.pop();
        }
        if vals.is_empty() {
            bps.clear();
        }
        self.breakpoints = bps;
        self.values = vals;
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn breakpoints(&self) -> &[Rat] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    /// Constant pieces as `(start, end, value)`, zero pieces omitted.
    pub fn segments(&self) -> impl Iterator<Item = (&Rat, &Rat, &Rat)> {
        (0..self.values.len())
            .map(|i| {
                (
                    &self.breakpoints[i],
                    &self.breakpoints[i + 1],
                    &self.values[i],
                )
            })
            .filter(|(_, _, v)| !v.is_zero())
    }

    /// Smallest interval outside of which the function vanishes.
    pub fn support(&self) -> Option<(&Rat, &Rat)> {
        if self.is_zero() {
            None
        } else {
            Some((
                self.breakpoints.first().unwrap(),
                self.breakpoints.last().unwrap(),
            ))
        }
    }

    /// Right-continuous evaluation; zero outside the support.
    pub fn eval(&self, t: &Rat) -> Rat {
        if self.is_zero() {
            return Rat::zero();
        }
        match self.breakpoints.binary_search(t) {
            Ok(i) | Err(i) if i >= self.breakpoints.len() => Rat::zero(),
            Ok(i) => self.values.get(i).cloned().unwrap_or_else(Rat::zero),
            Err(0) => Rat::zero(),
            Err(i) => self.values[i - 1].clone(),
        }
    }

    /// Exact integral over `[a, b]`. Requires `a <= b`.
    pub fn integrate(&self, a: &Rat, b: &Rat) -> Rat {
        assert!(a <= b, "integrate needs a <= b");
        let mut acc = Rat::zero();
        for i in 0..self.values.len() {
            let lo = a.clone().max(self.breakpoints[i].clone());
            let hi = b.clone().min(self.breakpoints[i + 1].clone());
            if lo < hi {
                acc += &self.values[i] * (hi - lo);
            }
        }
        acc
    }

    /// Integral over the whole line.
    pub fn total(&self) -> Rat {
        match self.support() {
            None => Rat::zero(),
            Some((a, b)) => {
                let (a, b) = (a.clone(), b.clone());
                self.integrate(&a, &b)
            }
        }
    }

    /// `g(t) = f(t - delta)`.
    pub fn shift(&self, delta: &Rat) -> StepFn {
        StepFn {
            breakpoints: self.breakpoints.iter().map(|b| b + delta).collect(),
            values: self.values.clone(),
        }
    }

    pub fn scale(&self, k: &Rat) -> StepFn {
        if k.is_zero() {
            return StepFn::zero();
        }
        let mut f = StepFn {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v * k).collect(),
        };
        f.canonicalize();
        f
    }

    pub fn neg(&self) -> StepFn {
        self.scale(&-Rat::one())
    }

    /// Pointwise combination on the merged breakpoint grid.
    /// `op` must map `(0, 0)` to `0` so the result stays zero off both supports.
    pub fn zip_with(&self, other: &StepFn, op: impl Fn(&Rat, &Rat) -> Rat) -> StepFn {
        debug_assert!(op(&Rat::zero(), &Rat::zero()).is_zero());
        let mut grid: Vec<Rat> = self
            .breakpoints
            .iter()
            .chain(other.breakpoints.iter())
            .cloned()
            .collect();
        grid.sort();
        grid.dedup();
        if grid.len() < 2 {
            return StepFn::zero();
        }
        let values: Vec<Rat> = grid
            .windows(2)
            .map(|w| op(&self.eval(&w[0]), &other.eval(&w[0])))
            .collect();
        StepFn::new(grid, values).expect("merged grid is increasing")
    }

    pub fn add(&self, other: &StepFn) -> StepFn {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &StepFn) -> StepFn {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn min(&self, other: &StepFn) -> StepFn {
        self.zip_with(other, |a, b| a.clone().min(b.clone()))
    }

    pub fn max(&self, other: &StepFn) -> StepFn {
        self.zip_with(other, |a, b| a.clone().max(b.clone()))
    }

    /// Multiplication by the indicator of `[a, b)`.
    pub fn restrict(&self, a: &Rat, b: &Rat) -> StepFn {
        if a >= b || self.is_zero() {
            return StepFn::zero();
        }
        let window = StepFn::constant(a.clone(), b.clone(), Rat::one());
        self.zip_with(&window, |v, w| if w.is_zero() { Rat::zero() } else { v.clone() })
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|v| !v.is_negative())
    }

    /// Largest level (zero counts, since the function vanishes somewhere).
    pub fn max_level(&self) -> Rat {
        self.values
            .iter()
            .fold(Rat::zero(), |acc, v| acc.max(v.clone()))
    }

    /// Smallest positive level on the support, if any.
    pub fn min_positive_level(&self) -> Option<Rat> {
        self.values
            .iter()
            .filter(|v| v.is_positive())
            .min()
            .cloned()
    }

    /// The running integral `t -> integral of f over (-inf, t]` as a
    /// piecewise-linear function (constant 0 before the support, constant
    /// total after it).
    pub fn cumulative(&self) -> PwlFn {
        if self.is_zero() {
            return PwlFn::constant(Rat::zero());
        }
        let mut knots = Vec::with_capacity(self.breakpoints.len());
        let mut acc = Rat::zero();
        knots.push((self.breakpoints[0].clone(), Rat::zero()));
        for i in 0..self.values.len() {
            acc += &self.values[i] * (&self.breakpoints[i + 1] - &self.breakpoints[i]);
            knots.push((self.breakpoints[i + 1].clone(), acc.clone()));
        }
        PwlFn::new(knots).expect("breakpoints increasing")
    }
}

impl std::fmt::Debug for StepFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "StepFn(0)");
        }
        write!(f, "StepFn(")?;
        for i in 0..self.values.len() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(
                f,
                "[{},{})->{}",
                self.breakpoints[i],
                self.breakpoints[i + 1],
                self.values[i]
            )?;
        }
        write!(f, ")")
    }
}

impl<'de> Deserialize<'de> for StepFn {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            breakpoints: Vec<Rat>,
            values: Vec<Rat>,
        }
        let raw = Raw::deserialize(deserializer)?;
        StepFn::new(raw.breakpoints, raw.values).map_err(serde::de::Error::custom)
    }
}
