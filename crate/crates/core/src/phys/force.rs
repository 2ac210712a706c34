use crate::error::{Error, Result};

/// Value and first two time derivatives of an external force.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ForceEval {
    /// f, dyn
    pub f: f64,
    /// df/dt, dyn/s
    pub df: f64,
    /// d2f/dt2, dyn/s^2
    pub d2f: f64,
}

/// Uniformly spaced force samples with second-order derivative estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceTable {
    start: f64,
    spacing: f64,
    values: Vec<f64>,
    rates: Vec<f64>,
    accels: Vec<f64>,
}

impl ForceTable {
    pub fn new(start_s: f64, spacing_s: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::Domain(format!(
                "tabulated force needs at least 3 samples, got {}",
                values.len()
            )));
        }
        if !(spacing_s.is_finite() && spacing_s > 0.0) || !start_s.is_finite() {
            return Err(Error::Domain(format!(
                "tabulated force needs finite start and positive spacing, got {start_s}, {spacing_s}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("tabulated force contains non-finite samples".into()));
        }
        let n = values.len();
        let h = spacing_s;
        let f = &values;
        let mut rates = vec![0.0; n];
        let mut accels = vec![0.0; n];
        for i in 1..n - 1 {
            rates[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
            accels[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h);
        }
        rates[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
        rates[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
        if n >= 4 {
            accels[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / (h * h);
            accels[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / (h * h);
        } else {
            accels[0] = accels[1];
            accels[n - 1] = accels[1];
        }
        Ok(ForceTable {
            start: start_s,
            spacing: spacing_s,
            values,
            rates,
            accels,
        })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.start + self.spacing * (self.values.len() - 1) as f64
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn eval(&self, t: f64) -> Result<ForceEval> {
        let (start, end) = (self.start, self.end());
        let slack = 1e-12 * self.spacing;
        if !(t >= start - slack && t <= end + slack) {
            return Err(Error::OutOfRange { t, start, end });
        }
        let s = ((t - start) / self.spacing).max(0.0);
        let i = (s.floor() as usize).min(self.values.len() - 2);
        let w = (s - i as f64).clamp(0.0, 1.0);
        let lerp = |v: &[f64]| v[i] + w * (v[i + 1] - v[i]);
        Ok(ForceEval {
            f: lerp(&self.values),
            df: lerp(&self.rates),
            d2f: lerp(&self.accels),
        })
    }
}

/// External force f(t) acting on the particle, in dyn.
#[derive(Debug, Clone, PartialEq)]
pub enum ForceModel {
    Zero,
    Constant {
        amplitude: f64,
    },
    /// Switches from 0 to `amplitude` at `t_on`. The derivative is reported
    /// as zero away from the jump; `t_on` is a breakpoint for integrators.
    Step {
        amplitude: f64,
        t_on: f64,
    },
    /// amplitude * sin(omega t + phase)
    SinDrive {
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
    /// amplitude * exp(-(t - t0)^2 / (2 sigma^2))
    GaussianPulse {
        amplitude: f64,
        t0: f64,
        sigma: f64,
    },
    Tabulated(ForceTable),
}

impl ForceModel {
    pub fn sin_drive(amplitude: f64, omega: f64) -> Self {
        ForceModel::SinDrive {
            amplitude,
            omega,
            phase: 0.0,
        }
    }

    /// f(t), df/dt and d2f/dt2.
    pub fn evaluate(&self, t: f64) -> Result<ForceEval> {
        Ok(match *self {
            ForceModel::Zero => ForceEval::default(),
            ForceModel::Constant { amplitude } => ForceEval {
                f: amplitude,
                ..ForceEval::default()
            },
            ForceModel::Step { amplitude, t_on } => ForceEval {
                f: if t >= t_on { amplitude } else { 0.0 },
                ..ForceEval::default()
            },
            ForceModel::SinDrive {
                amplitude,
                omega,
                phase,
            } => {
                let (s, c) = (omega * t + phase).sin_cos();
                ForceEval {
                    f: amplitude * s,
                    df: amplitude * omega * c,
                    d2f: -amplitude * omega * omega * s,
                }
            }
            ForceModel::GaussianPulse { amplitude, t0, sigma } => {
                let u = (t - t0) / sigma;
                let g = amplitude * (-0.5 * u * u).exp();
                ForceEval {
                    f: g,
                    df: -g * u / sigma,
                    d2f: g * (u * u - 1.0) / (sigma * sigma),
                }
            }
            ForceModel::Tabulated(ref table) => return table.eval(t),
        })
    }

    /// Times where the force is discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            ForceModel::Step { t_on, .. } => vec![t_on],
            _ => Vec::new(),
        }
    }

    /// Characteristic force magnitude, used to pick internal units.
    pub fn scale(&self) -> f64 {
        match *self {
            ForceModel::Zero => 0.0,
            ForceModel::Constant { amplitude }
            | ForceModel::Step { amplitude, .. }
            | ForceModel::SinDrive { amplitude, .. }
            | ForceModel::GaussianPulse { amplitude, .. } => amplitude.abs(),
            ForceModel::Tabulated(ref table) => table.values.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ForceModel::Zero | ForceModel::Tabulated(_) => true,
            ForceModel::Constant { amplitude } => amplitude.is_finite(),
            ForceModel::Step { amplitude, t_on } => amplitude.is_finite() && t_on.is_finite(),
            ForceModel::SinDrive {
                amplitude,
                omega,
                phase,
            } => amplitude.is_finite() && omega.is_finite() && phase.is_finite(),
            ForceModel::GaussianPulse { amplitude, t0, sigma } => {
                amplitude.is_finite() && t0.is_finite() && sigma.is_finite() && sigma > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid force parameters: {self:?}")))
        }
    }
}

/// Free-function form of [`ForceModel::evaluate`].
pub fn evaluate_force(model: &ForceModel, t: f64) -> Result<ForceEval> {
    model.evaluate(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_force_has_no_derivatives() {
        let m = ForceModel::Constant { amplitude: 2.5 };
        for t in [-1.0, 0.0, 3.7e-20] {
            assert_eq!(
                m.evaluate(t).unwrap(),
                ForceEval {
                    f: 2.5,
                    df: 0.0,
                    d2f: 0.0
                }
            );
        }
    }

    #[test]
    fn sin_drive_derivatives() {
        let (f0, w) = (3.0, 2.0);
        let m = ForceModel::sin_drive(f0, w);
        let t = 0.37;
        let e = m.evaluate(t).unwrap();
        assert!((e.f - f0 * (w * t).sin()).abs() < 1e-15);
        assert!((e.df - f0 * w * (w * t).cos()).abs() < 1e-15);
        assert!((e.d2f + f0 * w * w * (w * t).sin()).abs() < 1e-14);
    }

    #[test]
    fn gaussian_pulse_derivatives_match_finite_differences() {
        let m = ForceModel::GaussianPulse {
            amplitude: 1.5,
            t0: 0.2,
            sigma: 0.7,
        };
        let t = 0.9;
        let h = 1e-5;
        let e = m.evaluate(t).unwrap();
        let fp = m.evaluate(t + h).unwrap();
        let fm = m.evaluate(t - h).unwrap();
        assert!((e.df - (fp.f - fm.f) / (2.0 * h)).abs() < 1e-9);
        assert!((e.d2f - (fp.df - fm.df) / (2.0 * h)).abs() < 1e-9);
    }

    #[test]
    fn step_reports_zero_derivative_and_breakpoint() {
        let m = ForceModel::Step {
            amplitude: 1.0,
            t_on: 2.0,
        };
        assert_eq!(m.evaluate(1.999).unwrap().f, 0.0);
        assert_eq!(m.evaluate(2.0).unwrap().f, 1.0);
        assert_eq!(m.evaluate(2.0).unwrap().df, 0.0);
        assert_eq!(m.breakpoints(), vec![2.0]);
    }

    #[test]
    fn table_rejects_short_or_bad_input() {
        assert!(ForceTable::new(0.0, 0.1, vec![1.0, 2.0]).is_err());
        assert!(ForceTable::new(0.0, 0.0, vec![1.0, 2.0, 3.0]).is_err());
        assert!(ForceTable::new(0.0, 0.1, vec![1.0, f64::NAN, 3.0]).is_err());
    }

    #[test]
    fn table_outside_domain_is_range_error() {
        let t = ForceTable::new(0.0, 0.5, vec![0.0, 1.0, 4.0]).unwrap();
        let m = ForceModel::Tabulated(t);
        assert!(matches!(m.evaluate(1.2), Err(Error::OutOfRange { .. })));
        assert!(matches!(m.evaluate(-0.1), Err(Error::OutOfRange { .. })));
        assert!(m.evaluate(1.0).is_ok());
    }

    fn max_table_errors(h: f64) -> (f64, f64) {
        let n = (2.0 / h).round() as usize + 1;
        let values = (0..n).map(|i| (i as f64 * h).sin()).collect();
        let m = ForceModel::Tabulated(ForceTable::new(0.0, h, values).unwrap());
        let (mut e1, mut e2) = (0.0f64, 0.0f64);
        for k in 0..=400 {
            let t = 2.0 * k as f64 / 400.0;
            let e = m.evaluate(t).unwrap();
            e1 = e1.max((e.df - t.cos()).abs());
            e2 = e2.max((e.d2f + t.sin()).abs());
        }
        (e1, e2)
    }

    #[test]
    fn table_derivatives_converge_at_second_order() {
        let (a1, a2) = max_table_errors(0.02);
        let (b1, b2) = max_table_errors(0.01);
        let order1 = (a1 / b1).log2();
        let order2 = (a2 / b2).log2();
        assert!(order1 > 1.8, "first derivative order {order1}");
        assert!(order2 > 1.8, "second derivative order {order2}");
    }
}
