/// Squared electron form factor as a function of real frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FormFactor {
    /// Omega^2 / (Omega^2 + omega^2)
    Feynman { cutoff: f64 },
    /// Omega^4 / (omega^2 + Omega^2)^2
    Sharp { cutoff: f64 },
}

impl FormFactor {
    pub fn squared(&self, omega: f64) -> f64 {
        match *self {
            FormFactor::Feynman { cutoff } => {
                let r = omega / cutoff;
                1.0 / (1.0 + r * r)
            }
            FormFactor::Sharp { cutoff } => {
                let r = omega / cutoff;
                let d = 1.0 + r * r;
                1.0 / (d * d)
            }
        }
    }

    pub fn cutoff(&self) -> f64 {
        match *self {
            FormFactor::Feynman { cutoff } | FormFactor::Sharp { cutoff } => cutoff,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unity_at_zero_frequency() {
        assert_eq!(FormFactor::Feynman { cutoff: 3.0 }.squared(0.0), 1.0);
        assert_eq!(FormFactor::Sharp { cutoff: 3.0 }.squared(0.0), 1.0);
    }

    #[test]
    fn feynman_at_causal_cutoff() {
        // cutoff = 1/tau_e gives 1/(1 + omega^2 tau_e^2)
        let tau = 6.26e-24;
        let ff = FormFactor::Feynman { cutoff: 1.0 / tau };
        let w = 0.3 / tau;
        assert!((ff.squared(w) - 1.0 / (1.0 + 0.09)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn bounds_and_ordering(w in -1e3f64..1e3, cut in 1e-3f64..1e3) {
            let f = FormFactor::Feynman { cutoff: cut }.squared(w);
            let s = FormFactor::Sharp { cutoff: cut }.squared(w);
            prop_assert!(f > 0.0 && f <= 1.0);
            prop_assert!(s > 0.0 && s <= 1.0);
            prop_assert!(s <= f);
        }

        #[test]
        fn feynman_monotone_in_abs_omega(a in 0.0f64..1e3, b in 0.0f64..1e3) {
            let ff = FormFactor::Feynman { cutoff: 7.0 };
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(ff.squared(hi) <= ff.squared(lo));
            prop_assert_eq!(ff.squared(-a), ff.squared(a));
        }
    }
}
