use nalgebra::{Complex, DMatrix, Schur};

use crate::error::{Error, Result};

type C = Complex<f64>;

pub const MAX_DEGREE: usize = 32;

/// Polynomial with complex coefficients in ascending degree.
///
/// Trailing zero coefficients are dropped, so a nonempty coefficient list
/// always has a nonzero leading entry. The zero polynomial has no coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoly {
    coeffs: Vec<C>,
}

impl ComplexPoly {
    pub fn new(mut coeffs: Vec<C>) -> Result<Self> {
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Domain("polynomial coefficients must be finite".into()));
        }
        while coeffs.last().is_some_and(|c| *c == C::new(0.0, 0.0)) {
            coeffs.pop();
        }
        if coeffs.len() > MAX_DEGREE + 1 {
            return Err(Error::Domain(format!(
                "polynomial degree {} exceeds {MAX_DEGREE}",
                coeffs.len() - 1
            )));
        }
        Ok(ComplexPoly { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| C::new(c, 0.0)).collect())
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[C]) -> Result<Self> {
        let mut c = vec![C::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![C::new(0.0, 0.0); c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= ck * r;
            }
            c = next;
        }
        Self::new(c)
    }

    pub fn coefficients(&self) -> &[C] {
        &self.coeffs
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_coefficient(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn eval(&self, z: C) -> C {
        self.coeffs.iter().rev().fold(C::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Sum of |c_k| |z|^k, the natural scale of rounding error in `eval`.
    pub fn eval_scale(&self, z: C) -> f64 {
        let r = z.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect();
        ComplexPoly { coeffs }
    }

    /// All roots with repetition, in no particular order.
    ///
    /// Exact zero roots are split off first. The rest are eigenvalues of the
    /// companion matrix of the rescaled monic polynomial, each refined by
    /// Newton steps that are kept only while they reduce the residual.
    pub fn roots(&self) -> Result<Vec<C>> {
        let n = self
            .degree()
            .ok_or_else(|| Error::Degenerate("zero polynomial has no roots".into()))?;
        let zeros = self.coeffs.iter().take_while(|c| c.norm() == 0.0).count();
        let mut roots = vec![C::new(0.0, 0.0); zeros];
        let reduced = ComplexPoly {
            coeffs: self.coeffs[zeros..].to_vec(),
        };
        let m = n - zeros;
        if m == 0 {
            return Ok(roots);
        }
        let c = &reduced.coeffs;
        if m == 1 {
            roots.push(-c[0] / c[1]);
            return Ok(roots);
        }
        let scale = (c[0].norm() / c[m].norm()).powf(1.0 / m as f64);
        // monic q(w) = p(scale w) / (c_m scale^m)
        let b: Vec<C> = (0..m).map(|k| c[k] * scale.powi(k as i32 - m as i32) / c[m]).collect();
        let companion = DMatrix::from_fn(m, m, |i, j| {
            if j == m - 1 {
                -b[i]
            } else if i == j + 1 {
                C::new(1.0, 0.0)
            } else {
                C::new(0.0, 0.0)
            }
        });
        let schur = Schur::try_new(companion, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Degenerate("companion eigenvalue iteration did not converge".into()))?;
        let eig = schur
            .eigenvalues()
            .ok_or_else(|| Error::Degenerate("companion Schur form is not triangular".into()))?;
        let dp = reduced.derivative();
        for w in eig.iter() {
            roots.push(polish(&reduced, &dp, *w * scale));
        }
        Ok(roots)
    }
}

fn polish(p: &ComplexPoly, dp: &ComplexPoly, mut z: C) -> C {
    let mut res = p.eval(z).norm();
    for _ in 0..50 {
        let d = dp.eval(z);
        if d.norm() == 0.0 || res == 0.0 {
            break;
        }
        let cand = z - p.eval(z) / d;
        let r = p.eval(cand).norm();
        if !(r < res) {
            break;
        }
        z = cand;
        res = r;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn matched_error(found: &[C], expected: &[C]) -> f64 {
        // greedy nearest matching; the separation bound makes it unambiguous
        let mut left: Vec<C> = found.to_vec();
        let mut worst = 0.0f64;
        for e in expected {
            let (i, d) = left
                .iter()
                .enumerate()
                .map(|(i, f)| (i, (f - e).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            worst = worst.max(d / e.norm().max(1e-300));
            left.remove(i);
        }
        worst
    }

    #[test]
    fn trims_and_reports_degree() {
        let p = ComplexPoly::from_real(&[1.0, 2.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.degree(), Some(1));
        assert!(ComplexPoly::from_real(&[0.0]).unwrap().is_zero());
        assert!(ComplexPoly::from_real(&[1.0; 34]).is_err());
        assert!(ComplexPoly::from_real(&[f64::NAN]).is_err());
    }

    #[test]
    fn zero_polynomial_has_no_roots() {
        let p = ComplexPoly::new(vec![]).unwrap();
        assert!(matches!(p.roots(), Err(Error::Degenerate(_))));
    }

    #[test]
    fn quadratic_roots() {
        // z^2 + 1
        let p = ComplexPoly::from_real(&[1.0, 0.0, 1.0]).unwrap();
        let r = p.roots().unwrap();
        assert!(matched_error(&r, &[c(0.0, 1.0), c(0.0, -1.0)]) < 1e-15);
    }

    #[test]
    fn exact_zero_roots_are_exact() {
        let p = ComplexPoly::from_real(&[0.0, 0.0, -1.0]).unwrap();
        assert_eq!(p.roots().unwrap(), vec![c(0.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn widely_scaled_roots() {
        let roots = [c(1e-7, -5e-15), c(-1e-7, -5e-15), c(3e4, 2.0)];
        let p = ComplexPoly::from_roots(&roots).unwrap();
        assert!(matched_error(&p.roots().unwrap(), &roots) < 1e-10);
    }

    #[test]
    fn derivative_of_cubic() {
        let p = ComplexPoly::from_real(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(p.derivative(), ComplexPoly::from_real(&[2.0, 6.0, 12.0]).unwrap());
    }

    fn separated_roots() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((0.1f64..10.0, 0.0f64..std::f64::consts::TAU), 1..=12).prop_filter(
            "roots separated by 1e-3",
            |v| {
                let r: Vec<C> = v.iter().map(|&(m, a)| C::from_polar(m, a)).collect();
                r.iter()
                    .enumerate()
                    .all(|(i, a)| r[i + 1..].iter().all(|b| (a - b).norm() >= 1e-3))
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn recovers_known_roots(spec in separated_roots()) {
            let roots: Vec<C> = spec.iter().map(|&(m, a)| C::from_polar(m, a)).collect();
            let p = ComplexPoly::from_roots(&roots).unwrap();
            let found = p.roots().unwrap();
            prop_assert_eq!(found.len(), roots.len());
            let err = matched_error(&found, &roots);
            prop_assert!(err < 1e-8, "relative error {}", err);
            for z in &found {
                prop_assert!(p.eval(*z).norm() < 1e-8 * p.max_coefficient());
            }
        }
    }
}
