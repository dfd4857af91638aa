use anyhow::{bail, Context, Result};
use serde_json::{json, Value};
use tieq_core::anneal::{certify, continuation_value, solve_annealed, AnnealReport};
use tieq_core::bridge::convergence_study;
use tieq_core::entropy::{gibbs_diagnostics, gibbs_policy};
use tieq_core::eval_ct::value_ct;
use tieq_core::eval_dt::value_dt;
use tieq_core::fixedpoint::solve_multistart;
use tieq_core::verify::{
    bellman_optimum, brute_force_oracle, deviation_test, direct_choice_check, mean_action_value_check,
    standard_equilibrium_scan,
};
use tieq_core::{load_model, sup_dist, Mode, ModelSpec, RelaxedPolicy};

use crate::config::{Command, RunConfig};
use crate::output::{Artifacts, Cell, Series};

/// Artifacts plus whether the run's own check (convergence or certificate) held.
pub struct Outcome {
    pub artifacts: Artifacts,
    pub passed: bool,
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<Outcome> {
    if let Some(c) = cfg.command {
        if c != command {
            bail!("/command: config is for `{}`, invoked as `{}`", c.name(), command.name());
        }
    }
    let model = load_model(&cfg.model).with_context(|| format!("model {}", cfg.model.display()))?;
    let report = model.validate();
    if !report.passed() {
        bail!(
            "model {} failed validation: {}",
            cfg.model.display(),
            serde_json::to_string(&report.violations)?
        );
    }
    let mode = cfg.mode.unwrap_or(model.mode());
    model.require_mode(mode)?;
    match command {
        Command::Solve => solve(cfg, &model, mode),
        Command::Anneal => anneal(cfg, &model, mode),
        Command::Bridge => bridge(cfg, &model),
        Command::Verify => verify(cfg, &model, mode),
        Command::Scan => scan(cfg, &model, mode),
    }
}

fn residual_series(trace: &[(usize, f64)]) -> Series {
    let mut s = Series::new("residual", &["iteration", "residual"]);
    s.rows = trace.iter().map(|&(i, r)| vec![Cell::Int(i), Cell::Float(r)]).collect();
    s
}

fn solve(cfg: &RunConfig, model: &ModelSpec, mode: Mode) -> Result<Outcome> {
    let lambda = cfg.lambda()?;
    let rep = solve_multistart(lambda, model, mode, &cfg.solver)?;
    let policy = gibbs_policy(&rep.y, lambda, model)?;
    let deviation = deviation_test(&policy, &rep.y, lambda, model, mode)?;
    let diagnostics = gibbs_diagnostics(&rep.y, lambda, model)?;
    let series = vec![residual_series(&rep.trace)];
    let passed = rep.converged;
    let report = json!({
        "command": "solve",
        "mode": mode,
        "lambda": lambda,
        "solver": cfg.solver,
        "fixed_point": rep,
        "policy": policy,
        "deviation": deviation,
        "diagnostics": diagnostics,
    });
    Ok(Outcome {
        artifacts: Artifacts { report, series },
        passed,
    })
}

fn anneal_series(r: &AnnealReport) -> Vec<Series> {
    let mut stages = Series::new(
        "stages",
        &["stage", "lambda", "gap", "off_support_mass", "residual", "iterations"],
    );
    let mut residual = Series::new("residual", &["stage", "iteration", "residual"]);
    for (k, s) in r.stages.iter().enumerate() {
        stages.rows.push(vec![
            Cell::Int(k),
            Cell::Float(s.lambda),
            Cell::Float(s.deviation_gap),
            Cell::Float(s.off_support_mass),
            Cell::Float(s.report.residual),
            Cell::Int(s.report.iterations),
        ]);
        for &(i, res) in &s.report.trace {
            residual.rows.push(vec![Cell::Int(k), Cell::Int(i), Cell::Float(res)]);
        }
    }
    vec![stages, residual]
}

fn anneal(cfg: &RunConfig, model: &ModelSpec, mode: Mode) -> Result<Outcome> {
    let r = solve_annealed(model, mode, &cfg.schedule, &cfg.solver, &cfg.thresholds)?;
    let passed = r.certificate.passed;
    let series = anneal_series(&r);
    let report = json!({
        "command": "anneal",
        "mode": mode,
        "schedule": cfg.schedule,
        "solver": cfg.solver,
        "thresholds": cfg.thresholds,
        "certificate": r.certificate,
        "result": r,
    });
    Ok(Outcome {
        artifacts: Artifacts { report, series },
        passed,
    })
}

fn bridge(cfg: &RunConfig, model: &ModelSpec) -> Result<Outcome> {
    let lambda = cfg.lambda()?;
    if cfg.steps.is_empty() {
        bail!("/steps: required for bridge");
    }
    let study = convergence_study(model, lambda, &cfg.steps, &cfg.solver)?;
    let mut s = Series::new("bridge", &["h", "discrepancy", "policy_distance"]);
    for r in &study.rows {
        s.rows.push(vec![
            Cell::Float(r.h),
            Cell::Float(r.value_discrepancy),
            Cell::Float(r.policy_distance),
        ]);
    }
    let passed = study.reference.converged && study.rows.iter().all(|r| r.report.converged);
    let report = json!({
        "command": "bridge",
        "lambda": lambda,
        "steps": cfg.steps,
        "solver": cfg.solver,
        "ratios": study.ratios(),
        "study": study,
    });
    Ok(Outcome {
        artifacts: Artifacts {
            report,
            series: vec![s],
        },
        passed,
    })
}

fn scan(cfg: &RunConfig, model: &ModelSpec, mode: Mode) -> Result<Outcome> {
    let found = standard_equilibrium_scan(model, mode, cfg.scan_tol)?;
    let candidates = (model.grid.len() as u64).checked_pow(model.states as u32);
    let report = json!({
        "command": "scan",
        "mode": mode,
        "tol": cfg.scan_tol,
        "candidates": candidates,
        "standard_equilibria": found,
    });
    Ok(Outcome {
        artifacts: Artifacts {
            report,
            series: Vec::new(),
        },
        passed: true,
    })
}

/// A bare policy, or any report carrying one under `final_policy` or `policy`.
fn load_policy(path: &std::path::Path) -> Result<RelaxedPolicy> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("policy {}", path.display()))?;
    let found = [
        v.pointer("/result/final_policy"),
        v.get("final_policy"),
        v.get("policy"),
        Some(&v),
    ];
    let p = found
        .into_iter()
        .flatten()
        .find(|x| x.get("densities").is_some())
        .with_context(|| format!("{}: no policy with `densities` found", path.display()))?;
    Ok(serde_json::from_value(p.clone())?)
}

fn verify(cfg: &RunConfig, model: &ModelSpec, mode: Mode) -> Result<Outcome> {
    let (policy, source) = match &cfg.verify.policy {
        Some(p) => (load_policy(p)?, p.display().to_string()),
        None => {
            let r = solve_annealed(model, mode, &cfg.schedule, &cfg.solver, &cfg.thresholds)?;
            (r.final_policy, "anneal".to_string())
        }
    };
    if policy.states() != model.states {
        bail!(
            "/verify/policy: {} states for a model with {}",
            policy.states(),
            model.states
        );
    }
    policy.check(&model.grid)?;
    let y = continuation_value(&policy, model, mode, 1e-12)?;
    let certificate = certify(&policy, &y, model, mode, &cfg.thresholds)?;
    let deviation = deviation_test(&policy, &y, 0.0, model, mode)?;
    let tol = cfg.verify.value_tol;

    let bellman = match bellman_optimum(model) {
        Ok(opt) => {
            let value = match mode {
                Mode::Discrete => value_dt(&policy, 0.0, 0, model, 1e-12)?,
                Mode::Continuous => value_ct(&policy, 0.0, 0.0, model, 1e-12)?,
            };
            let diff = sup_dist(&opt, &value);
            Some(json!({ "optimum": opt, "value": value, "diff": diff, "passed": diff <= tol }))
        }
        Err(tieq_core::Error::NotExponential) => None,
        Err(e) => return Err(e.into()),
    };
    let mean_action = match direct_choice_check(model) {
        Ok(()) => Some(mean_action_value_check(&policy, model, tol)?),
        Err(_) => None,
    };
    let brute_force = match (&cfg.verify.brute_force, mode) {
        (Some(bf), Mode::Discrete) => {
            let r = brute_force_oracle(model, bf)?;
            let scan = standard_equilibrium_scan(model, mode, bf.tol)?;
            Some(json!({ "agrees_with_scan": r.standard == scan, "result": r }))
        }
        (Some(_), Mode::Continuous) => bail!("/verify/brute_force: needs a discrete-time model"),
        (None, _) => None,
    };

    let passed = certificate.passed
        && bellman.as_ref().is_none_or(|b| b["passed"] == true)
        && mean_action.as_ref().is_none_or(|m| m.matched)
        && brute_force.as_ref().is_none_or(|b| b["agrees_with_scan"] == true);
    let report = json!({
        "command": "verify",
        "mode": mode,
        "policy_source": source,
        "thresholds": cfg.thresholds,
        "continuation": y,
        "certificate": certificate,
        "deviation": deviation,
        "bellman": bellman,
        "mean_action": mean_action,
        "brute_force": brute_force,
        "passed": passed,
    });
    Ok(Outcome {
        artifacts: Artifacts {
            report,
            series: Vec::new(),
        },
        passed,
    })
}
