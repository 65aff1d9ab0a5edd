use rototrap::gravity::{default_forced_dt, forced_evolve_from};
use rototrap::invariants::{build_invariant, invariance_residuals, invariant_null_space, trajectory_drift, InvariantLabel};
use rototrap::modes::eigenmodes;
use rototrap::nalgebra::Vector3;
use rototrap::quantum::{
    planar_stationary_k, riccati_residual, stationary_k_from_modes, wigner_decompose_into_invariants, wigner_form,
};
use rototrap::stability::{classify_chi_roots, default_tolerance, solve_cubic};
use rototrap::trap::{build_dynamics_matrix, char_poly_coeffs, char_poly_from_matrix, PhaseVector};
use rototrap::{Error, QuadraticInvariant, ValidatedConfig};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn bound(name: &str, value: f64, limit: f64) -> Check {
    Check { name: name.into(), passed: value.is_finite() && value <= limit, value: Some(value), limit: Some(limit), note: None }
}

fn flag(name: &str, passed: bool, note: impl Into<String>) -> Check {
    Check { name: name.into(), passed, value: None, limit: None, note: Some(note.into()) }
}

fn failed(name: &str, err: &Error) -> Check {
    flag(name, false, format!("{}: {err}", err.kind()))
}

fn residual_check(name: &str, inv: &QuadraticInvariant, cfg: &ValidatedConfig) -> Check {
    let g = inv.form().amax();
    let scale = (1.0 + g) * (1.0 + cfg.omega() + cfg.v().amax());
    let r = invariance_residuals(inv, cfg).into_iter().fold(0.0, f64::max);
    bound(name, r / scale, 1e-10)
}

/// Runs the invariant and property checks on one configuration.
pub fn verify(cfg: &ValidatedConfig) -> Report {
    let mut checks = Vec::new();

    let coeffs = char_poly_coeffs(cfg);
    let m = build_dynamics_matrix(cfg);
    match char_poly_from_matrix(&m) {
        Ok(k) => {
            let diff = [(k.a - coeffs.a).abs(), (k.b - coeffs.b).abs(), (k.c - coeffs.c).abs()];
            let d = diff.into_iter().fold(0.0, f64::max) / coeffs.max_abs().max(1.0);
            checks.push(bound("char_poly_paths", d, 1e-9));
        }
        Err(e) => checks.push(failed("char_poly_paths", &e)),
    }

    let class = classify_chi_roots(&solve_cubic(&coeffs), default_tolerance(&coeffs));
    let stable = matches!(class, Ok(c) if c.is_stable());
    match &class {
        Ok(c) => checks.push(flag("classification", true, c.name())),
        Err(e) => checks.push(failed("classification", e)),
    }

    match eigenmodes(&m) {
        Ok(set) => {
            let norm = m.m.amax().max(1.0);
            let r = set.modes.iter().map(|md| md.residual(&m)).fold(0.0, f64::max);
            checks.push(bound("mode_residual", r / norm, 1e-9));
            let mut w2: Vec<f64> = set.omega_squared().iter().map(|z| z.re).collect();
            let mut chi: Vec<f64> = solve_cubic(&coeffs).roots.iter().map(|z| z.re).collect();
            w2.sort_by(f64::total_cmp);
            chi.sort_by(f64::total_cmp);
            let d = w2.iter().zip(&chi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            checks.push(bound("modes_vs_cubic", d / coeffs.max_abs().max(1.0), 1e-8));
        }
        Err(e) => checks.push(failed("mode_residual", &e)),
    }

    let mut labels = vec![InvariantLabel::C1, InvariantLabel::C2_3D];
    if cfg.is_axis_aligned() {
        labels.push(InvariantLabel::C2_2D);
    }
    let mut invariants = Vec::new();
    for label in labels {
        match build_invariant(label, cfg) {
            Ok(inv) => {
                checks.push(residual_check(&format!("invariance_{}", label.name()), &inv, cfg));
                invariants.push(inv);
            }
            Err(e) => checks.push(failed(&format!("invariance_{}", label.name()), &e)),
        }
    }
    if let Ok(c3) = build_invariant(InvariantLabel::C3, cfg) {
        let r = invariance_residuals(&c3, cfg);
        checks.push(flag("invariance_C3_reported", true, format!("residuals {r:?}")));
    }
    let space = invariant_null_space(cfg);
    checks.push(Check {
        name: "null_space_rank".into(),
        passed: space.nullity >= 3,
        value: Some(space.nullity as f64),
        limit: Some(3.0),
        note: None,
    });

    if stable {
        let x0 = PhaseVector::new([1.0, 0.5, -0.3, 0.2, -0.1, 0.4]);
        let w_max = solve_cubic(&coeffs).roots.iter().map(|z| z.re.sqrt()).fold(0.0, f64::max);
        let t_end = 20.0 * std::f64::consts::TAU / w_max;
        match forced_evolve_from(cfg, &Vector3::zeros(), x0, t_end, default_forced_dt(cfg) / 4.0) {
            Ok(traj) => {
                for inv in &invariants {
                    if inv.label == InvariantLabel::C2_2D {
                        continue;
                    }
                    checks.push(bound(&format!("drift_{}", inv.label.name()), trajectory_drift(inv, &traj), 1e-7));
                }
            }
            Err(e) => checks.push(failed("drift", &e)),
        }
        match stationary_k_from_modes(cfg) {
            Ok(k) => {
                checks.push(bound("riccati_residual", riccati_residual(&k, cfg).unwrap_or(f64::INFINITY), 1e-9));
                checks.push(flag("re_k_positive", k.is_normalizable(), format!("min eig {:e}", k.min_re_eigenvalue())));
                match wigner_form(&k).and_then(|wf| wigner_decompose_into_invariants(&wf, cfg)) {
                    Ok(d) => checks.push(bound("wigner_span", d.residual, 1e-6)),
                    Err(e) => checks.push(failed("wigner_span", &e)),
                }
                let z_axis = (cfg.axis() - Vector3::z()).amax() == 0.0;
                if z_axis && cfg.v()[(0, 1)] == 0.0 {
                    let v = cfg.v();
                    match planar_stationary_k(v[(0, 0)], v[(1, 1)], v[(2, 2)], cfg.omega()) {
                        Ok(p) => {
                            let d = (k.matrix3().unwrap() - p.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
                            checks.push(bound("planar_closed_form", d, 1e-10));
                        }
                        Err(e) => checks.push(failed("planar_closed_form", &e)),
                    }
                }
            }
            Err(Error::DegenerateFrequencies) => checks.push(flag("stationary_state", true, "skipped: degenerate frequencies")),
            Err(e) => checks.push(failed("stationary_state", &e)),
        }
    } else if class.is_ok() {
        let res = stationary_k_from_modes(cfg);
        checks.push(flag(
            "no_stationary_state_when_unstable",
            matches!(res, Err(Error::InInstabilityRegion)),
            match res {
                Err(e) => e.kind().to_string(),
                Ok(_) => "a stationary state was produced".into(),
            },
        ));
    }

    let passed = checks.iter().all(|c| c.passed);
    Report { passed, checks }
}
