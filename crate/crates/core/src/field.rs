//! Space-time data fields.
//!
//! Loads are integrated once per spatial factor when a field is given in
//! separated form `sum_i a_i(t) f_i(x)`, which turns the per-step source
//! assembly into a short linear combination of precomputed vectors.

use std::fmt;
use std::sync::Arc;

use crate::mesh::Point;

pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceFn<const N: usize> = Arc<dyn Fn(Point) -> [f64; N] + Send + Sync>;
pub type GeneralFn<const N: usize> = Arc<dyn Fn(Point, f64) -> [f64; N] + Send + Sync>;

#[derive(Clone, Default)]
pub enum SpaceTimeField<const N: usize> {
    #[default]
    Zero,
    Separable(Vec<(TimeFn, SpaceFn<N>)>),
    General(GeneralFn<N>),
}

impl<const N: usize> fmt::Debug for SpaceTimeField<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceTimeField::Zero => write!(f, "Zero"),
            SpaceTimeField::Separable(t) => write!(f, "Separable({} terms)", t.len()),
            SpaceTimeField::General(_) => write!(f, "General"),
        }
    }
}

impl<const N: usize> SpaceTimeField<N> {
    pub fn general(f: impl Fn(Point, f64) -> [f64; N] + Send + Sync + 'static) -> Self {
        SpaceTimeField::General(Arc::new(f))
    }

    pub fn separable(
        time: impl Fn(f64) -> f64 + Send + Sync + 'static,
        space: impl Fn(Point) -> [f64; N] + Send + Sync + 'static,
    ) -> Self {
        SpaceTimeField::Separable(vec![(Arc::new(time), Arc::new(space))])
    }

    /// Constant in time.
    pub fn steady(space: impl Fn(Point) -> [f64; N] + Send + Sync + 'static) -> Self {
        Self::separable(|_| 1.0, space)
    }

    /// Sum of two fields. Separable parts stay separable.
    pub fn plus(self, other: Self) -> Self {
        use SpaceTimeField::*;
        match (self, other) {
            (Zero, b) => b,
            (a, Zero) => a,
            (Separable(mut a), Separable(b)) => {
                a.extend(b);
                Separable(a)
            }
            (a, b) => {
                let (a, b) = (a.clone(), b.clone());
                Self::general(move |p, t| {
                    let x = a.eval(p, t);
                    let y = b.eval(p, t);
                    std::array::from_fn(|i| x[i] + y[i])
                })
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SpaceTimeField::Zero)
    }

    pub fn eval(&self, p: Point, t: f64) -> [f64; N] {
        match self {
            SpaceTimeField::Zero => [0.0; N],
            SpaceTimeField::Separable(terms) => {
                let mut out = [0.0; N];
                for (a, f) in terms {
                    let s = a(t);
                    if s == 0.0 {
                        continue;
                    }
                    let v = f(p);
                    for i in 0..N {
                        out[i] += s * v[i];
                    }
                }
                out
            }
            SpaceTimeField::General(f) => f(p, t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_and_sum() {
        let a = SpaceTimeField::<2>::separable(|t| t, |p| [p[0], 1.0]);
        let b = SpaceTimeField::<2>::steady(|p| [0.0, p[1]]);
        let c = a.clone().plus(b.clone());
        assert!(matches!(c, SpaceTimeField::Separable(ref v) if v.len() == 2));
        assert_eq!(c.eval([2.0, 3.0], 0.5), [1.0, 3.5]);
        let g = SpaceTimeField::<2>::general(|p, t| [p[0] * t, 0.0]).plus(a);
        assert_eq!(g.eval([2.0, 0.0], 2.0), [8.0, 2.0]);
        assert_eq!(SpaceTimeField::<1>::Zero.eval([1.0, 1.0], 1.0), [0.0]);
        assert!(SpaceTimeField::<1>::Zero.plus(SpaceTimeField::Zero).is_zero());
    }
}
