//! Explicit Runge-Kutta integration: Dormand-Prince 5(4) with PI step-size
//! control and dense output, plus classical RK4 for fixed-step reference runs.

use crate::error::{Error, Result};

/// A first-order system y' = f(t, y).
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Dormand-Prince 5(4), adaptive unless a fixed step is requested.
    Dopri5,
    /// Classical fourth-order Runge-Kutta; always fixed step.
    Rk4,
}

#[derive(Debug, Clone)]
pub struct Options {
    pub method: Method,
    pub rtol: f64,
    pub atol: f64,
    pub first_step: Option<f64>,
    pub max_step: f64,
    pub max_steps: usize,
    /// When set, disables error control and takes equal steps no longer than this.
    pub fixed_step: Option<f64>,
    /// Times where the right-hand side may be discontinuous; the solver
    /// stops exactly there and restarts.
    pub breakpoints: Vec<f64>,
    /// Output times. `None` records every accepted step.
    pub t_eval: Option<Vec<f64>>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            method: Method::Dopri5,
            rtol: 1e-9,
            atol: 1e-12,
            first_step: None,
            max_step: f64::INFINITY,
            max_steps: 10_000_000,
            fixed_step: None,
            breakpoints: Vec::new(),
            t_eval: None,
        }
    }
}

impl Options {
    pub fn with_tol(tol: f64) -> Self {
        Options {
            rtol: tol,
            atol: tol,
            ..Options::default()
        }
    }

    pub fn fixed(method: Method, h: f64) -> Self {
        Options {
            method,
            fixed_step: Some(h),
            ..Options::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Solution {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub stats: Stats,
}

impl Solution {
    pub fn last(&self) -> Option<(f64, &[f64])> {
        self.t.last().map(|&t| (t, self.y.last().unwrap().as_slice()))
    }

    pub fn component(&self, i: usize) -> Vec<f64> {
        self.y.iter().map(|y| y[i]).collect()
    }
}

// Dormand-Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Workspace {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    err: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
            err: vec![0.0; n],
        }
    }
}

struct Recorder<'a> {
    t_eval: Option<&'a [f64]>,
    next: usize,
    out: Solution,
}

impl Recorder<'_> {
    fn push(&mut self, t: f64, y: &[f64]) {
        self.out.t.push(t);
        self.out.y.push(y.to_vec());
    }
}

/// Integrates `sys` from `t0` to `t1` (forward) starting at `y0`.
///
/// `monitor` is called after every accepted step with the new time and
/// state; returning an error aborts the integration with that error.
pub fn solve<S, M>(sys: &S, t0: f64, t1: f64, y0: &[f64], opts: &Options, mut monitor: M) -> Result<Solution>
where
    S: OdeSystem + ?Sized,
    M: FnMut(f64, &[f64]) -> Result<()>,
{
    let n = sys.dim();
    if y0.len() != n {
        return Err(Error::Domain(format!(
            "initial state has length {}, system dimension is {n}",
            y0.len()
        )));
    }
    if !(t0.is_finite() && t1.is_finite() && t1 >= t0) {
        return Err(Error::Domain(format!("invalid time span [{t0}, {t1}]")));
    }
    if opts.fixed_step.is_none() && !(opts.rtol > 0.0 && opts.atol >= 0.0) {
        return Err(Error::Domain("tolerances must be positive".into()));
    }
    if opts.method == Method::Rk4 && opts.fixed_step.is_none() {
        return Err(Error::Domain("RK4 requires a fixed step".into()));
    }
    if opts.method == Method::Rk4 && opts.t_eval.is_some() {
        return Err(Error::Domain("RK4 records every step; t_eval is not supported".into()));
    }
    let mut t_eval_sorted;
    let t_eval = match &opts.t_eval {
        Some(te) => {
            t_eval_sorted = te.clone();
            t_eval_sorted.sort_by(f64::total_cmp);
            if t_eval_sorted.iter().any(|&t| t < t0 || t > t1) {
                return Err(Error::Domain("t_eval outside integration span".into()));
            }
            Some(t_eval_sorted.as_slice())
        }
        None => None,
    };

    let mut rec = Recorder {
        t_eval,
        next: 0,
        out: Solution::default(),
    };
    match rec.t_eval {
        None => rec.push(t0, y0),
        Some(te) => {
            while rec.next < te.len() && te[rec.next] == t0 {
                rec.push(t0, y0);
                rec.next += 1;
            }
        }
    }

    let mut segments: Vec<f64> = opts.breakpoints.iter().copied().filter(|&b| b > t0 && b < t1).collect();
    segments.sort_by(f64::total_cmp);
    segments.dedup();
    segments.push(t1);

    let mut ws = Workspace::new(n);
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut h_hint = opts.first_step;
    for seg_end in segments {
        if seg_end <= t {
            continue;
        }
        h_hint = match (opts.method, opts.fixed_step) {
            (Method::Rk4, Some(h)) => {
                rk4_segment(sys, &mut t, seg_end, &mut y, h, opts, &mut ws, &mut rec, &mut monitor)?;
                None
            }
            _ => Some(dopri_segment(
                sys,
                &mut t,
                seg_end,
                &mut y,
                h_hint,
                opts,
                &mut ws,
                &mut rec,
                &mut monitor,
            )?),
        };
    }
    Ok(rec.out)
}

fn error_norm(y: &[f64], y_new: &[f64], err: &[f64], opts: &Options) -> f64 {
    let n = y.len() as f64;
    let sum: f64 = y
        .iter()
        .zip(y_new)
        .zip(err)
        .map(|((&a, &b), &e)| {
            let sk = opts.atol + opts.rtol * a.abs().max(b.abs());
            let r = e / sk;
            r * r
        })
        .sum();
    (sum / n).sqrt()
}

fn initial_step<S: OdeSystem + ?Sized>(
    sys: &S,
    t: f64,
    y: &[f64],
    f0: &[f64],
    span: f64,
    opts: &Options,
    ws_tmp: &mut [f64],
    f1: &mut [f64],
) -> Result<f64> {
    let n = y.len() as f64;
    let sk = |v: f64| opts.atol + opts.rtol * v.abs();
    let d0 = (y.iter().map(|&v| (v / sk(v)).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (y.iter().zip(f0).map(|(&v, &d)| (d / sk(v)).powi(2)).sum::<f64>() / n).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6 * span
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(span).min(opts.max_step);
    for i in 0..y.len() {
        ws_tmp[i] = y[i] + h0 * f0[i];
    }
    sys.rhs(t + h0, ws_tmp, f1)?;
    let d2 = (y
        .iter()
        .zip(f0)
        .zip(f1.iter())
        .map(|((&v, &a), &b)| ((b - a) / sk(v)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let dmax = d1.max(d2);
    let h1 = if dmax <= 1e-15 {
        (1e-6f64).max(h0 * 1e-3)
    } else {
        (0.01 / dmax).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(span).min(opts.max_step))
}

fn dopri_stages<S: OdeSystem + ?Sized>(sys: &S, t: f64, h: f64, y: &[f64], ws: &mut Workspace) -> Result<()> {
    let n = y.len();
    let Workspace { k, tmp, y_new, err } = ws;
    for i in 0..n {
        tmp[i] = y[i] + h * A21 * k[0][i];
    }
    sys.rhs(t + C2 * h, tmp, &mut k[1])?;
    for i in 0..n {
        tmp[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
    }
    sys.rhs(t + C3 * h, tmp, &mut k[2])?;
    for i in 0..n {
        tmp[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
    }
    sys.rhs(t + C4 * h, tmp, &mut k[3])?;
    for i in 0..n {
        tmp[i] = y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
    }
    sys.rhs(t + C5 * h, tmp, &mut k[4])?;
    for i in 0..n {
        tmp[i] = y[i] + h * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
    }
    sys.rhs(t + h, tmp, &mut k[5])?;
    for i in 0..n {
        y_new[i] = y[i] + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
    }
    let (head, tail) = k.split_at_mut(6);
    sys.rhs(t + h, y_new, &mut tail[0])?;
    let k7 = &tail[0];
    for i in 0..n {
        err[i] =
            h * (E1 * head[0][i] + E3 * head[2][i] + E4 * head[3][i] + E5 * head[4][i] + E6 * head[5][i] + E7 * k7[i]);
    }
    Ok(())
}

/// Dense output of the last step at `t_out` in [t, t + h].
fn dense(t: f64, h: f64, y: &[f64], ws: &Workspace, t_out: f64, out: &mut [f64]) {
    let theta = (t_out - t) / h;
    let theta1 = 1.0 - theta;
    let k = &ws.k;
    for i in 0..y.len() {
        let ydiff = ws.y_new[i] - y[i];
        let bspl = h * k[0][i] - ydiff;
        let r4 = ydiff - h * k[6][i] - bspl;
        let r5 = h * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
        out[i] = y[i] + theta * (ydiff + theta1 * (bspl + theta * (r4 + theta1 * r5)));
    }
}

#[allow(clippy::too_many_arguments)]
fn dopri_segment<S, M>(
    sys: &S,
    t: &mut f64,
    t_end: f64,
    y: &mut [f64],
    h_hint: Option<f64>,
    opts: &Options,
    ws: &mut Workspace,
    rec: &mut Recorder<'_>,
    monitor: &mut M,
) -> Result<f64>
where
    S: OdeSystem + ?Sized,
    M: FnMut(f64, &[f64]) -> Result<()>,
{
    let n = y.len();
    let span = t_end - *t;
    sys.rhs(*t, y, &mut ws.k[0])?;
    rec.out.stats.evaluations += 1;

    let fixed = opts.fixed_step;
    let (mut h, n_fixed) = match fixed {
        Some(hf) => {
            let steps = (span / hf).ceil().max(1.0);
            (span / steps, Some(steps as usize))
        }
        None => {
            let h = match h_hint {
                Some(h) => h.min(span),
                None => {
                    let (k0, rest) = ws.k.split_at_mut(1);
                    rec.out.stats.evaluations += 1;
                    initial_step(sys, *t, y, &k0[0], span, opts, &mut ws.tmp, &mut rest[0])?
                }
            };
            (h, None)
        }
    };

    let mut err_old: f64 = 1e-4;
    let mut rejected_last = false;
    let mut taken = 0usize;
    let mut out_buf = vec![0.0; n];
    loop {
        let remaining = t_end - *t;
        if remaining <= 0.0 || n_fixed.is_some_and(|nf| taken >= nf) {
            break;
        }
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        if h.abs() <= 16.0 * f64::EPSILON * t.abs() || h.abs() < f64::MIN_POSITIVE {
            return Err(Error::StepUnderflow { t: *t, h });
        }
        if rec.out.stats.accepted + rec.out.stats.rejected >= opts.max_steps {
            return Err(Error::MaxSteps(opts.max_steps));
        }

        dopri_stages(sys, *t, h, y, ws)?;
        rec.out.stats.evaluations += 6;

        let mut h_next = h;
        let accept = if fixed.is_some() {
            true
        } else {
            let err = error_norm(y, &ws.y_new, &ws.err, opts);
            if !err.is_finite() {
                h *= 0.1;
                rec.out.stats.rejected += 1;
                rejected_last = true;
                continue;
            }
            let fac11 = err.powf(0.17);
            if err <= 1.0 {
                let mut fac = fac11 / err_old.powf(0.04);
                fac = (fac / 0.9).clamp(0.2, 10.0);
                let mut h_new = (h / fac).min(opts.max_step);
                if rejected_last {
                    h_new = h_new.min(h);
                }
                err_old = err.max(1e-4);
                rejected_last = false;
                h_next = h_new;
                true
            } else {
                h /= (fac11 / 0.9).min(5.0);
                rec.out.stats.rejected += 1;
                rejected_last = true;
                false
            }
        };
        if !accept {
            continue;
        }
        rec.out.stats.accepted += 1;
        taken += 1;
        let t_new = if last { t_end } else { *t + h };

        if let Some(te) = rec.t_eval {
            while rec.next < te.len() && te[rec.next] <= t_new {
                let tq = te[rec.next];
                if tq == t_new {
                    rec.push(tq, &ws.y_new);
                } else {
                    dense(*t, h, y, ws, tq, &mut out_buf);
                    rec.push(tq, &out_buf);
                }
                rec.next += 1;
            }
        } else {
            rec.push(t_new, &ws.y_new);
        }

        y.copy_from_slice(&ws.y_new);
        let (k0, rest) = ws.k.split_at_mut(1);
        k0[0].copy_from_slice(&rest[5]);
        *t = t_new;
        monitor(*t, y)?;
        h = h_next;
    }
    Ok(h)
}

#[allow(clippy::too_many_arguments)]
fn rk4_segment<S, M>(
    sys: &S,
    t: &mut f64,
    t_end: f64,
    y: &mut [f64],
    h_max: f64,
    opts: &Options,
    ws: &mut Workspace,
    rec: &mut Recorder<'_>,
    monitor: &mut M,
) -> Result<()>
where
    S: OdeSystem + ?Sized,
    M: FnMut(f64, &[f64]) -> Result<()>,
{
    let n = y.len();
    let span = t_end - *t;
    let steps = (span / h_max).ceil().max(1.0) as usize;
    if steps > opts.max_steps {
        return Err(Error::MaxSteps(opts.max_steps));
    }
    let h = span / steps as f64;
    let t_start = *t;
    for s in 0..steps {
        let tc = t_start + s as f64 * h;
        let Workspace { k, tmp, .. } = ws;
        sys.rhs(tc, y, &mut k[0])?;
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k[0][i];
        }
        sys.rhs(tc + 0.5 * h, tmp, &mut k[1])?;
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k[1][i];
        }
        sys.rhs(tc + 0.5 * h, tmp, &mut k[2])?;
        for i in 0..n {
            tmp[i] = y[i] + h * k[2][i];
        }
        sys.rhs(tc + h, tmp, &mut k[3])?;
        for i in 0..n {
            y[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
        rec.out.stats.evaluations += 4;
        rec.out.stats.accepted += 1;
        *t = if s + 1 == steps {
            t_end
        } else {
            t_start + (s + 1) as f64 * h
        };
        rec.push(*t, y);
        monitor(*t, y)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Exp;
    impl OdeSystem for Exp {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
            dy[0] = y[0];
            Ok(())
        }
    }

    struct Sho;
    impl OdeSystem for Sho {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
            dy[0] = y[1];
            dy[1] = -y[0];
            Ok(())
        }
    }

    /// x'' = sin(t), x(0) = 0, v(0) = 0  ->  x = t - sin t
    struct Driven;
    impl OdeSystem for Driven {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
            dy[0] = y[1];
            dy[1] = t.sin();
            Ok(())
        }
    }

    #[test]
    fn adaptive_exponential() {
        let sol = solve(&Exp, 0.0, 2.0, &[1.0], &Options::with_tol(1e-10), |_, _| Ok(())).unwrap();
        let (t, y) = sol.last().unwrap();
        assert_eq!(t, 2.0);
        assert!((y[0] - 2f64.exp()).abs() / 2f64.exp() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_period() {
        let tp = 2.0 * std::f64::consts::PI;
        let sol = solve(&Sho, 0.0, 10.0 * tp, &[1.0, 0.0], &Options::with_tol(1e-11), |_, _| {
            Ok(())
        })
        .unwrap();
        let (_, y) = sol.last().unwrap();
        assert!((y[0] - 1.0).abs() < 1e-8);
        assert!(y[1].abs() < 1e-8);
    }

    #[test]
    fn dense_output_matches_solution() {
        let te: Vec<f64> = (0..=50).map(|i| 0.1 * i as f64).collect();
        let opts = Options {
            t_eval: Some(te.clone()),
            ..Options::with_tol(1e-10)
        };
        let sol = solve(&Sho, 0.0, 5.0, &[1.0, 0.0], &opts, |_, _| Ok(())).unwrap();
        assert_eq!(sol.t, te);
        for (t, y) in sol.t.iter().zip(&sol.y) {
            assert!((y[0] - t.cos()).abs() < 1e-8, "t={t} err={}", y[0] - t.cos());
            assert!((y[1] + t.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn dense_output_is_fourth_order_within_a_step() {
        // one large fixed step; midpoint interpolation error must shrink ~h^5
        let err_at = |h: f64| {
            let opts = Options {
                t_eval: Some(vec![0.37 * h]),
                ..Options::fixed(Method::Dopri5, h)
            };
            let sol = solve(&Exp, 0.0, h, &[1.0], &opts, |_, _| Ok(())).unwrap();
            (sol.y[0][0] - (0.37 * h).exp()).abs()
        };
        let order = (err_at(0.4) / err_at(0.2)).log2();
        assert!(order > 4.5, "dense output order {order}");
    }

    #[test]
    fn breakpoints_are_hit_exactly() {
        let opts = Options {
            breakpoints: vec![0.3, 1.7],
            ..Options::with_tol(1e-8)
        };
        let sol = solve(&Exp, 0.0, 2.0, &[1.0], &opts, |_, _| Ok(())).unwrap();
        assert!(sol.t.contains(&0.3));
        assert!(sol.t.contains(&1.7));
    }

    #[test]
    fn monitor_can_abort() {
        let r = solve(&Exp, 0.0, 50.0, &[1.0], &Options::with_tol(1e-8), |t, y| {
            if y[0] > 1e3 {
                Err(Error::Runaway {
                    t_s: t,
                    amplification: y[0],
                    e_folding_s: 1.0,
                })
            } else {
                Ok(())
            }
        });
        assert!(matches!(r, Err(Error::Runaway { .. })));
    }

    fn fixed_error(method: Method, h: f64) -> f64 {
        let t1 = 4.0;
        let sol = solve(&Driven, 0.0, t1, &[0.0, 0.0], &Options::fixed(method, h), |_, _| Ok(())).unwrap();
        let (_, y) = sol.last().unwrap();
        (y[0] - (t1 - t1.sin())).abs()
    }

    #[test]
    fn rk4_is_fourth_order() {
        let order = (fixed_error(Method::Rk4, 0.1) / fixed_error(Method::Rk4, 0.05)).log2();
        assert!((order - 4.0).abs() < 0.2, "observed order {order}");
    }

    #[test]
    fn dopri_fixed_step_is_at_least_fourth_order() {
        let order = (fixed_error(Method::Dopri5, 0.2) / fixed_error(Method::Dopri5, 0.1)).log2();
        assert!(order > 3.8, "observed order {order}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let o = Options::default();
        assert!(solve(&Exp, 1.0, 0.0, &[1.0], &o, |_, _| Ok(())).is_err());
        assert!(solve(&Exp, 0.0, 1.0, &[1.0, 2.0], &o, |_, _| Ok(())).is_err());
        let rk = Options {
            method: Method::Rk4,
            ..Options::default()
        };
        assert!(solve(&Exp, 0.0, 1.0, &[1.0], &rk, |_, _| Ok(())).is_err());
    }

    #[test]
    fn max_steps_is_enforced() {
        let o = Options {
            max_steps: 5,
            ..Options::with_tol(1e-12)
        };
        assert!(matches!(
            solve(&Sho, 0.0, 100.0, &[1.0, 0.0], &o, |_, _| Ok(())),
            Err(Error::MaxSteps(5))
        ));
    }
}
