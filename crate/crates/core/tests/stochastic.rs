use radreact_core::nonrel::StateNR;
use radreact_core::phys::{Constants, ForceModel, ParticleParams};
use radreact_core::stats::fit_line;
use radreact_core::stochastic::{
    ensemble_mean, fluctuating_fo, langevin_oscillator, sample_noise, EnsembleConfig, NoiseSpec, Scheme,
};

const C: Constants = Constants::GAUSSIAN;

struct Setup {
    p: ParticleParams,
    k: f64,
    w0: f64,
    gamma: f64,
}

fn setup(w0_tau: f64) -> Setup {
    let p = ParticleParams::electron(&C);
    let w0 = w0_tau / p.tau_e();
    let k = p.mass() * w0 * w0;
    Setup {
        p,
        k,
        w0,
        gamma: k * p.tau_e() / p.mass(),
    }
}

/// Relaxation of an ensemble prepared far from equilibrium: the mean energy
/// excess decays at zeta/M and the mean-velocity envelope at zeta/(2M).
#[test]
fn regression_rates_match_damping() {
    let s = setup(1e-2);
    let temp = 300.0;
    let kt = C.k_b * temp;
    let v0 = (2.0 * 50.0 * kt / s.p.mass()).sqrt();
    let init = StateNR {
        t: 0.0,
        x: 0.0,
        v: v0,
        a: None,
    };
    let spec = NoiseSpec::white(temp, s.k * s.p.tau_e(), 0).unwrap();
    let t_end = 2.0 / s.gamma;
    let dt = 0.02 / s.w0;
    let cfg = EnsembleConfig::new(400, 2024).unwrap();
    let member = |seed| langevin_oscillator(&s.p, s.k, &spec.with_seed(seed), &C, &init, t_end, dt);

    // energy needs the second moment, so gather it alongside the summary
    let paths: Vec<_> = (0..cfg.n_members())
        .map(|i| member(cfg.member_seed(i)).unwrap())
        .collect();
    let summary = ensemble_mean(&cfg, member).unwrap();
    let stride = 500;
    let idx: Vec<usize> = (0..summary.t.len()).step_by(stride).collect();
    let t: Vec<f64> = idx.iter().map(|&i| summary.t[i]).collect();
    let excess: Vec<f64> = idx
        .iter()
        .map(|&i| {
            let e: f64 = paths
                .iter()
                .map(|p| 0.5 * s.k * p.x[i].powi(2) + 0.5 * s.p.mass() * p.v[i].powi(2))
                .sum::<f64>()
                / paths.len() as f64;
            (e - kt).ln()
        })
        .collect();
    let energy_rate = -fit_line(&t, &excess).unwrap().slope;
    assert!(
        (energy_rate / s.gamma - 1.0).abs() < 0.05,
        "energy rate / gamma = {}",
        energy_rate / s.gamma
    );

    let envelope: Vec<f64> = idx
        .iter()
        .map(|&i| {
            (summary.mean_v[i].powi(2) + (s.w0 * summary.mean_x[i]).powi(2))
                .sqrt()
                .ln()
        })
        .collect();
    let amp_rate = -fit_line(&t, &envelope).unwrap().slope;
    assert!(
        (amp_rate / (0.5 * s.gamma) - 1.0).abs() < 0.05,
        "amplitude rate / (gamma/2) = {}",
        amp_rate / (0.5 * s.gamma)
    );
}

#[test]
fn correlated_noise_mean_follows_newton() {
    let p = ParticleParams::electron(&C);
    let spec = NoiseSpec::exp_correlated(300.0, 1e-12, Some(5e-22), 0).unwrap();
    let init = StateNR {
        t: 0.0,
        x: 0.0,
        v: 2e4,
        a: None,
    };
    let t_end = 2e-20;
    let summary = ensemble_mean(&EnsembleConfig::new(2000, 5).unwrap(), |seed| {
        fluctuating_fo(
            &p,
            &ForceModel::Zero,
            &spec.with_seed(seed),
            &C,
            &init,
            t_end,
            5e-23,
            Scheme::Heun,
        )
    })
    .unwrap();
    let mut worst = 0.0f64;
    for i in 1..summary.t.len() {
        let z = (summary.mean_x[i] - 2e4 * summary.t[i]) / summary.stderr_x[i];
        worst = worst.max(z.abs());
    }
    assert!(worst < 4.5, "worst z-score {worst}");
    assert!(summary.stderr_x.last().unwrap() > &0.0);
}

#[test]
fn correlated_velocity_change_is_trapezoid_plus_tau_delta_f() {
    let p = ParticleParams::electron(&C);
    let spec = NoiseSpec::exp_correlated(1000.0, 1e-11, Some(1e-21), 3).unwrap();
    let (t_end, dt) = (1e-20, 1e-22);
    let tr = fluctuating_fo(
        &p,
        &ForceModel::Zero,
        &spec,
        &C,
        &StateNR::at_rest(0.0),
        t_end,
        dt,
        Scheme::Heun,
    )
    .unwrap();
    let n = tr.len() - 1;
    let f = sample_noise(&spec, &C, dt, n + 1).unwrap();
    let impulse: f64 = f.windows(2).map(|w| 0.5 * dt * (w[0] + w[1])).sum();
    let expect = (impulse + p.tau_e() * (f[n] - f[0])) / p.mass();
    let scale = f.iter().fold(0.0f64, |m, x| m.max(x.abs())) * t_end / p.mass();
    assert!((tr.v[n] - expect).abs() < 1e-12 * scale);
}
