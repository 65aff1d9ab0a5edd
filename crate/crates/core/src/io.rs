//! JSON and CSV formats for configurations and results.
//!
//! CSV numbers use `{:.16e}` (17 significant digits, `.` decimal) so that
//! identical inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Complex, DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::ConfigError;
use crate::gravity::ResonanceReport;
use crate::invariants::QuadraticInvariant;
use crate::modes::ModeSet;
use crate::numerics::Trajectory;
use crate::quantum::{GaussianState, RiccatiTrajectory};
use crate::stability::{RegionMap, ScanTable};
use crate::trap::{validate_config, PhaseVector, RotationSpec, TrapConfig, TrapPotential, ValidatedConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialSpec {
    Diag([f64; 3]),
    Matrix([[f64; 3]; 3]),
}

/// On-disk trap configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub potential: PotentialSpec,
    pub axis: [f64; 3],
    pub omega: f64,
    #[serde(default = "unit")]
    pub omega_unit: f64,
}

fn unit() -> f64 {
    1.0
}

impl ConfigDocument {
    pub fn to_config(&self) -> TrapConfig<f64> {
        let potential = match &self.potential {
            PotentialSpec::Diag([x, y, z]) => TrapPotential::from_diag(*x, *y, *z),
            PotentialSpec::Matrix(m) => TrapPotential::from_matrix(Matrix3::from_fn(|i, j| m[i][j])),
        };
        let mut cfg = TrapConfig::new(potential, RotationSpec::new(self.omega, Vector3::from(self.axis)));
        cfg.frequency_unit = self.omega_unit;
        cfg
    }

    pub fn from_config(cfg: &TrapConfig<f64>) -> Self {
        let v = cfg.potential.matrix();
        let potential = if (0..3).all(|i| (0..3).all(|j| i == j || v[(i, j)] == 0.0)) {
            PotentialSpec::Diag([v[(0, 0)], v[(1, 1)], v[(2, 2)]])
        } else {
            PotentialSpec::Matrix(std::array::from_fn(|i| std::array::from_fn(|j| v[(i, j)])))
        };
        ConfigDocument {
            potential,
            axis: cfg.rotation.axis.into(),
            omega: cfg.rotation.omega,
            omega_unit: cfg.frequency_unit,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("malformed configuration: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] ConfigError),
}

pub fn parse_config(text: &str) -> Result<ValidatedConfig<f64>, LoadError> {
    let doc: ConfigDocument = serde_json::from_str(text)?;
    Ok(validate_config(doc.to_config())?)
}

pub fn load_config(path: &Path) -> Result<ValidatedConfig<f64>, LoadError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| LoadError::Read { path: path.display().to_string(), source })?;
    parse_config(&text)
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn cjson(z: Complex<f64>) -> Value {
    json!({"re": z.re, "im": z.im})
}

pub const SCAN_HEADER: &str = "omega,chi1_re,chi1_im,chi2_re,chi2_im,chi3_re,chi3_im,class,region";

fn scan_fields(out: &mut String, row: &crate::stability::ScanRow<f64>) {
    out.push_str(&num(row.omega));
    for z in &row.roots {
        let _ = write!(out, ",{},{}", num(z.re), num(z.im));
    }
    let _ = write!(out, ",{},{}", row.class.name(), row.region.name());
}

pub fn scan_csv(table: &ScanTable<f64>) -> String {
    let mut out = String::from(SCAN_HEADER);
    out.push('\n');
    for row in &table.rows {
        scan_fields(&mut out, row);
        out.push('\n');
    }
    out
}

/// Scan table with a `chi_parabola = Ω²` column for overlaying `χ = Ω²`
/// on the branches, plus a `near_resonance` flag marking the grid row
/// closest to each resonant rate.
pub fn emit_plot_data(table: &ScanTable<f64>, resonance: Option<&ResonanceReport<f64>>) -> String {
    let mut marked = vec![false; table.rows.len()];
    if let Some(r) = resonance {
        let (w1, w2) = r.omegas();
        for w in [w1, w2] {
            let nearest = table
                .rows
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1.omega - w).abs().total_cmp(&(b.1.omega - w).abs()));
            if let Some((i, row)) = nearest {
                let spacing = table.rows.get(1).map(|r1| r1.omega - table.rows[0].omega).unwrap_or(0.0);
                if (row.omega - w).abs() <= spacing {
                    marked[i] = true;
                }
            }
        }
    }
    let mut out = format!("{SCAN_HEADER},chi_parabola,near_resonance\n");
    for (row, mark) in table.rows.iter().zip(marked) {
        scan_fields(&mut out, row);
        let _ = writeln!(out, ",{},{}", num(row.omega * row.omega), u8::from(mark));
    }
    out
}

pub fn boundaries_json(map: &RegionMap<f64>) -> Value {
    json!({
        "omega_minus": map.omega_minus,
        "omega_plus": map.omega_plus,
        "oscillatory": map.oscillatory.map(|(a, b)| vec![a, b]),
    })
}

pub fn modes_json(set: &ModeSet<f64>) -> Value {
    Value::Array(
        set.modes
            .iter()
            .map(|m| {
                json!({
                    "omega_re": m.omega.re,
                    "omega_im": m.omega.im,
                    "xbar": m.xbar.iter().map(|&z| cjson(z)).collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}

pub fn resonance_json(report: &ResonanceReport<f64>, gaps: Option<[f64; 2]>) -> Value {
    let (w1, w2) = report.omegas();
    let mut v = json!({
        "omega1_sq": report.omega1_sq,
        "omega2_sq": report.omega2_sq,
        "omega1": w1,
        "omega2": w2,
        "region1": report.region1.name(),
        "region2": report.region2.name(),
    });
    if let Some(g) = gaps {
        v["branch_gap"] = json!(g);
    }
    v
}

pub fn gaussian_json(state: &GaussianState<f64>) -> Value {
    let k = &state.k;
    let rows: Vec<Vec<Value>> = (0..k.nrows()).map(|i| (0..k.ncols()).map(|j| cjson(k[(i, j)])).collect()).collect();
    json!({ "k": rows })
}

#[derive(Deserialize)]
struct CDoc {
    re: f64,
    im: f64,
}

#[derive(Deserialize)]
struct GaussianDoc {
    k: Vec<Vec<CDoc>>,
}

pub fn gaussian_from_json(text: &str) -> Result<GaussianState<f64>, LoadError> {
    let doc: GaussianDoc = serde_json::from_str(text)?;
    let n = doc.k.len();
    if doc.k.iter().any(|r| r.len() != n) || !(1..=3).contains(&n) {
        return Err(LoadError::Parse(serde::de::Error::custom("k must be a square 1x1, 2x2 or 3x3 array")));
    }
    let m = DMatrix::from_fn(n, n, |i, j| Complex::new(doc.k[i][j].re, doc.k[i][j].im));
    GaussianState::new(m).map_err(|e| LoadError::Parse(serde::de::Error::custom(e.to_string())))
}

/// `t` then `Re`, `Im` of the upper-triangle entries of `K` in row-major order.
pub fn riccati_csv(traj: &RiccatiTrajectory<f64>) -> String {
    let mut out = String::from("t");
    for i in 0..3 {
        for j in i..3 {
            let _ = write!(out, ",k{}{}_re,k{}{}_im", i + 1, j + 1, i + 1, j + 1);
        }
    }
    out.push('\n');
    for (t, k) in traj.iter() {
        out.push_str(&num(t));
        for i in 0..3 {
            for j in i..3 {
                let _ = write!(out, ",{},{}", num(k[(i, j)].re), num(k[(i, j)].im));
            }
        }
        out.push('\n');
    }
    out
}

pub fn trajectory_csv(traj: &Trajectory<f64, PhaseVector<f64>>) -> String {
    let mut out = String::from("t,x,y,z,px,py,pz\n");
    for (t, x) in traj.iter() {
        out.push_str(&num(t));
        for v in x.0.iter() {
            out.push(',');
            out.push_str(&num(*v));
        }
        out.push('\n');
    }
    out
}

fn rows3(m: &Matrix3<f64>) -> Value {
    json!((0..3).map(|i| (0..3).map(|j| m[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>())
}

pub fn invariant_json(inv: &QuadraticInvariant<f64>) -> Value {
    json!({
        "label": inv.label.name(),
        "t": rows3(&inv.t_mat),
        "w": rows3(&inv.w_mat),
        "u": rows3(&inv.u_mat),
    })
}
