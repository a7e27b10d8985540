//! The five run modes behind the subcommands.

use rayon::prelude::*;

use subspace_sim::{
    build_model, canonical_split, dark_period_stats, derive_rate_system, effective_hamiltonian,
    expectations_of, find_dark_states, integrate_master_equation, integrate_rate_system,
    run_ensemble, uniform_grid, DensityMatrix, EnsembleOptions, LevelScheme, ModelParams,
    StateVector, TimeSeries,
};

use crate::config::{InitialState, ResolvedConfig, SimMethod};
use crate::output::{fmt_param, fmt_sig, series_csv, sweep_suffix, OutputSet};
use crate::CliError;

fn scheme_for(cfg: &ResolvedConfig, omega: f64, gamma: f64) -> Result<LevelScheme, CliError> {
    let params =
        ModelParams::new(cfg.xi, omega, gamma).map_err(|e| CliError::Config(e.to_string()))?;
    build_model(cfg.kind, params).map_err(|e| CliError::Config(e.to_string()))
}

fn initial_density(cfg: &ResolvedConfig) -> DensityMatrix {
    match cfg.initial {
        InitialState::Ket(level) => DensityMatrix::pure(cfg.kind.dim(), level),
        InitialState::Mixed => DensityMatrix::maximally_mixed(cfg.kind.dim()),
    }
}

fn simulate_point(cfg: &ResolvedConfig, omega: f64, gamma: f64) -> Result<TimeSeries, CliError> {
    let scheme = scheme_for(cfg, omega, gamma)?;
    let grid = uniform_grid(cfg.t_max, cfg.n_points);
    let rho0 = initial_density(cfg);
    let series = match cfg.method {
        SimMethod::Master => integrate_master_equation(&scheme, &rho0, &grid, cfg.solver),
        SimMethod::Rate => {
            let rs =
                derive_rate_system(&scheme, true).map_err(|e| CliError::Numeric(e.to_string()))?;
            let init = expectations_of(&rho0, &rs);
            integrate_rate_system(&rs, &init, &grid, cfg.solver)
        }
    }
    .map_err(|e| CliError::Numeric(e.to_string()))?;
    Ok(series)
}

pub fn run_simulate(cfg: &ResolvedConfig) -> Result<String, CliError> {
    let dim = cfg.kind.dim();
    let results: Vec<(String, String)> = cfg
        .sweep
        .par_iter()
        .map(|&(omega, gamma)| {
            let series = simulate_point(cfg, omega, gamma)?;
            Ok((
                format!("{}.csv", sweep_suffix(omega, gamma)),
                series_csv(&series, dim),
            ))
        })
        .collect::<Result<_, CliError>>()?;

    let mut out = OutputSet::new(&cfg.output);
    for (suffix, content) in results {
        out.add(&suffix, content);
    }
    let paths = out.commit("simulate", &cfg.scenario_json)?;
    let mut text = String::new();
    for p in &paths {
        text.push_str(&format!("wrote {}\n", p.display()));
    }
    Ok(text)
}

pub fn run_derive(cfg: &ResolvedConfig) -> Result<String, CliError> {
    let mut out = OutputSet::new(&cfg.output);
    let mut text = String::new();
    for &(omega, gamma) in &cfg.sweep {
        let scheme = scheme_for(cfg, omega, gamma)?;
        let rs = derive_rate_system(&scheme, true).map_err(|e| CliError::Numeric(e.to_string()))?;

        // aligned text block
        text.push_str(&format!(
            "rate system for {} (xi = {}, omega = {}, gamma = {}): {} operators\n",
            cfg.kind,
            fmt_param(cfg.xi),
            fmt_param(omega),
            fmt_param(gamma),
            rs.size()
        ));
        text.push_str(&format!("{:>10}", ""));
        for label in rs.labels() {
            text.push_str(&format!("{label:>14}"));
        }
        text.push_str(&format!("{:>14}\n", "b"));
        for (i, label) in rs.labels().iter().enumerate() {
            text.push_str(&format!("{label:>10}"));
            for j in 0..rs.size() {
                text.push_str(&format!("{:>14.6}", rs.m()[(i, j)]));
            }
            text.push_str(&format!("{:>14.6}\n", rs.b()[i]));
        }
        let (id, coeffs) = rs.p0_map();
        text.push_str(&format!("P0 = {id:.6}"));
        for (c, label) in coeffs.iter().zip(rs.labels()) {
            if c.abs() > 1e-14 {
                text.push_str(&format!(" + {c:.6} <{label}>"));
            }
        }
        text.push_str("\n\n");

        // CSV: label, matrix row, b
        let mut csv = String::from("label");
        for label in rs.labels() {
            csv.push(',');
            csv.push_str(label);
        }
        csv.push_str(",b\n");
        for (i, label) in rs.labels().iter().enumerate() {
            csv.push_str(label);
            for j in 0..rs.size() {
                csv.push(',');
                csv.push_str(&fmt_sig(rs.m()[(i, j)]));
            }
            csv.push(',');
            csv.push_str(&fmt_sig(rs.b()[i]));
            csv.push('\n');
        }
        out.add(&format!("rate_{}.csv", sweep_suffix(omega, gamma)), csv);
    }
    let paths = out.commit("derive", &cfg.scenario_json)?;
    for p in &paths {
        text.push_str(&format!("wrote {}\n", p.display()));
    }
    Ok(text)
}

pub fn run_steady(cfg: &ResolvedConfig) -> Result<String, CliError> {
    if cfg.sweep.iter().any(|&(_, gamma)| gamma <= 0.0) {
        return Err(CliError::Config(
            "steady mode needs gamma > 0 (no steady state without dissipation)".into(),
        ));
    }
    let dim = cfg.kind.dim();
    let mut csv = String::from("model,xi,omega,gamma,P0");
    for level in 0..dim {
        csv.push_str(&format!(",p{level}"));
    }
    csv.push('\n');
    let mut text = format!(
        "steady states of {} (xi = {})\n{:>10} {:>10} {:>12}\n",
        cfg.kind,
        fmt_param(cfg.xi),
        "omega",
        "gamma",
        "P0"
    );
    for &(omega, gamma) in &cfg.sweep {
        let scheme = scheme_for(cfg, omega, gamma)?;
        let rs = derive_rate_system(&scheme, true).map_err(|e| CliError::Numeric(e.to_string()))?;
        let fixed = rs
            .steady_state()
            .map_err(|e| CliError::Numeric(e.to_string()))?;
        let x = fixed.as_slice().expect("contiguous");
        let p0 = rs.population_cs(x);
        csv.push_str(&format!(
            "{},{},{},{},{}",
            cfg.kind,
            fmt_param(cfg.xi),
            fmt_param(omega),
            fmt_param(gamma),
            fmt_sig(p0)
        ));
        for level in 0..dim {
            csv.push(',');
            if let Some((c, w)) = rs.level_population_map(level) {
                let p = c + w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>();
                csv.push_str(&fmt_sig(p));
            }
        }
        csv.push('\n');
        text.push_str(&format!(
            "{:>10} {:>10} {:>12.8}\n",
            fmt_param(omega),
            fmt_param(gamma),
            p0
        ));
    }
    let mut out = OutputSet::new(&cfg.output);
    out.add("steady.csv", csv);
    let paths = out.commit("steady", &cfg.scenario_json)?;
    for p in &paths {
        text.push_str(&format!("wrote {}\n", p.display()));
    }
    Ok(text)
}

pub fn run_analyze(cfg: &ResolvedConfig) -> Result<String, CliError> {
    let mut summary_csv = String::from("omega,gamma,protected,n_dark_states,max_coupling\n");
    let mut dark_csv = String::from(
        "omega,gamma,dark_index,component,amplitude_re,amplitude_im,coupling_re,coupling_im\n",
    );
    let mut heff_csv = String::from("omega,gamma,row,col,re,im\n");
    let mut text = String::new();

    for &(omega, gamma) in &cfg.sweep {
        let scheme = scheme_for(cfg, omega, gamma)?;
        let (slow, fast) = canonical_split(&scheme).map_err(|e| CliError::Config(e.to_string()))?;
        let report = find_dark_states(&scheme, &slow, &fast)
            .map_err(|e| CliError::Numeric(e.to_string()))?;
        let h_eff = effective_hamiltonian(scheme.h_int(), scheme.p_cs())
            .map_err(|e| CliError::Numeric(e.to_string()))?;

        let max_coupling = report
            .couplings
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        summary_csv.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_param(omega),
            fmt_param(gamma),
            report.protected,
            report.kernel_vectors.len(),
            fmt_sig(max_coupling)
        ));

        text.push_str(&format!(
            "analysis of {} (xi = {}, omega = {}, gamma = {})\n",
            cfg.kind,
            fmt_param(cfg.xi),
            fmt_param(omega),
            fmt_param(gamma)
        ));
        text.push_str(&format!(
            "  dark states of the fast generator: {}\n",
            report.kernel_vectors.len()
        ));
        for (k, v) in report.kernel_vectors.iter().enumerate() {
            let comps: Vec<String> = v
                .amplitudes()
                .iter()
                .enumerate()
                .map(|(i, a)| format!("|{i}>: {:+.6}{:+.6}i", a.re, a.im))
                .collect();
            text.push_str(&format!("  dark state {k}: {}\n", comps.join("  ")));
            let coupling = report.couplings[k][0];
            text.push_str(&format!(
                "    slow coupling to the controlled subspace: |{:.6}{:+.6}i| = {:.6}\n",
                coupling.re,
                coupling.im,
                coupling.norm()
            ));
            for (i, a) in v.amplitudes().iter().enumerate() {
                dark_csv.push_str(&format!(
                    "{},{},{k},{i},{},{},{},{}\n",
                    fmt_param(omega),
                    fmt_param(gamma),
                    fmt_sig(a.re),
                    fmt_sig(a.im),
                    fmt_sig(coupling.re),
                    fmt_sig(coupling.im)
                ));
            }
        }
        text.push_str(&format!(
            "  verdict: {}\n",
            if report.protected {
                "protected"
            } else {
                "NOT protected"
            }
        ));

        let d = h_eff.dim();
        let mut all_zero = true;
        for row in 0..d {
            for col in 0..d {
                let z = h_eff.get(row, col);
                if z.norm() > 1e-14 {
                    all_zero = false;
                }
                heff_csv.push_str(&format!(
                    "{},{},{row},{col},{},{}\n",
                    fmt_param(omega),
                    fmt_param(gamma),
                    fmt_sig(z.re),
                    fmt_sig(z.im)
                ));
            }
        }
        text.push_str(&format!(
            "  effective hamiltonian on the controlled subspace: {}\n\n",
            if all_zero { "0" } else { "nontrivial" }
        ));
    }

    let mut out = OutputSet::new(&cfg.output);
    out.add("analysis.csv", summary_csv);
    out.add("dark_states.csv", dark_csv);
    out.add("heff.csv", heff_csv);
    let paths = out.commit("analyze", &cfg.scenario_json)?;
    for p in &paths {
        text.push_str(&format!("wrote {}\n", p.display()));
    }
    Ok(text)
}

pub fn run_traject(cfg: &ResolvedConfig) -> Result<String, CliError> {
    let traj_cfg = cfg.trajectories.ok_or_else(|| {
        CliError::Config("traject mode needs a trajectories section (or --ntraj/--seed)".into())
    })?;
    let level = match cfg.initial {
        InitialState::Ket(level) => level,
        InitialState::Mixed => {
            return Err(CliError::Config(
                "traject mode unravels pure states; use initial = ket<level>".into(),
            ))
        }
    };
    if cfg.sweep.iter().any(|&(_, gamma)| gamma <= 0.0) {
        return Err(CliError::Config(
            "traject mode needs gamma > 0 (nothing to unravel)".into(),
        ));
    }

    let mut out = OutputSet::new(&cfg.output);
    let mut text = String::new();
    for &(omega, gamma) in &cfg.sweep {
        let scheme = scheme_for(cfg, omega, gamma)?;
        let psi0 = StateVector::basis_state(cfg.kind.dim(), level);
        let opts = EnsembleOptions {
            n_traj: traj_cfg.n_traj,
            seed: traj_cfg.seed,
            solver: cfg.solver,
        };
        let ensemble = run_ensemble(&scheme, &psi0, cfg.t_max, &[], &opts)
            .map_err(|e| CliError::Numeric(e.to_string()))?;

        let mut jumps_csv = String::from("traj_id,t,channel\n");
        for (traj_id, jumps) in ensemble.jumps.iter().enumerate() {
            for j in jumps {
                jumps_csv.push_str(&format!("{traj_id},{},{}\n", fmt_sig(j.time), j.channel));
            }
        }
        out.add(
            &format!("jumps_{}.csv", sweep_suffix(omega, gamma)),
            jumps_csv,
        );

        let threshold = traj_cfg
            .dark_threshold
            .unwrap_or_else(|| subspace_sim::default_dark_threshold(gamma));
        let mut stats = dark_period_stats(&ensemble.jumps, threshold, cfg.t_max)
            .map_err(|e| CliError::Numeric(e.to_string()))?;
        stats.seed = Some(traj_cfg.seed);

        let mut stats_csv = String::from("n_traj,seed,threshold,mean_dark,n_samples,rate_light\n");
        stats_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            stats.n_traj,
            traj_cfg.seed,
            fmt_sig(threshold),
            stats.mean_dark_period.map(fmt_sig).unwrap_or_default(),
            stats.dark_period_samples.len(),
            stats.emission_rate_light.map(fmt_sig).unwrap_or_default(),
        ));
        out.add(
            &format!("stats_{}.csv", sweep_suffix(omega, gamma)),
            stats_csv,
        );

        text.push_str(&format!(
            "omega = {}, gamma = {}: {} trajectories, {} dark samples, mean dark period {}\n",
            fmt_param(omega),
            fmt_param(gamma),
            stats.n_traj,
            stats.dark_period_samples.len(),
            stats
                .mean_dark_period
                .map(|m| format!("{m:.4}"))
                .unwrap_or_else(|| "n/a".into()),
        ));
    }
    let paths = out.commit("traject", &cfg.scenario_json)?;
    for p in &paths {
        text.push_str(&format!("wrote {}\n", p.display()));
    }
    Ok(text)
}
