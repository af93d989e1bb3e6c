//! Problem files: a strict JSON document mirroring `ProblemSpec` plus
//! optional hypothesis and solver blocks.

use std::path::Path;

use hilfer_core::certificates::{GrowthHypothesis, LipschitzHypothesis};
use hilfer_core::expr::{parse, Expr};
use hilfer_core::model::{validate, BoundaryTerm, Problem, ProblemSpec};
use hilfer_core::solver::SolveOptions;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermFile {
    pub coeff: f64,
    pub order: f64,
    pub point: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthFile {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub mbar1: f64,
    pub mbar2: f64,
    pub mbar3: f64,
}

/// `l1`, `l2` are the Lipschitz constants of `f` and `g`; `l1_zero`,
/// `l2_zero` bound `|f(t, 0, 0)|` and `|g(t, 0, 0)|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LipschitzFile {
    pub l1: f64,
    pub l2: f64,
    pub l1_zero: f64,
    pub l2_zero: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub a: f64,
    pub b: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
    pub p1: f64,
    pub q1: f64,
    pub p2: f64,
    pub q2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    #[serde(default)]
    pub x_terms: Vec<TermFile>,
    #[serde(default)]
    pub y_terms: Vec<TermFile>,
    pub f: String,
    pub g: String,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<LipschitzFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverFile>,
}

/// A validated problem file.
pub struct Loaded {
    /// The file with `f` and `g` in canonical printed form.
    pub echo: ProblemFile,
    pub problem: Problem,
    pub growth: Option<GrowthHypothesis>,
    pub lipschitz: Option<LipschitzHypothesis>,
    pub solver: SolveOptions,
}

fn expression(src: &str, field: &str) -> Result<Expr, CliError> {
    parse(src).map_err(|e| CliError::Input(format!("{field}: {e}")))
}

fn terms(list: &[TermFile]) -> Vec<BoundaryTerm> {
    list.iter()
        .map(|t| BoundaryTerm { coeff: t.coeff, order: t.order, point: t.point })
        .collect()
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("problem file: {e}")))
    }

    pub fn spec(&self) -> Result<ProblemSpec, CliError> {
        Ok(ProblemSpec {
            a: self.a,
            b: self.b,
            alpha1: self.alpha1,
            beta1: self.beta1,
            alpha2: self.alpha2,
            beta2: self.beta2,
            p1: self.p1,
            q1: self.q1,
            p2: self.p2,
            q2: self.q2,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            x_terms: terms(&self.x_terms),
            y_terms: terms(&self.y_terms),
            f: expression(&self.f, "f")?,
            g: expression(&self.g, "g")?,
            n: self.n,
        })
    }

    /// Validates everything and resolves solver defaults.
    pub fn load(self) -> Result<Loaded, CliError> {
        let spec = self.spec()?;
        let mut echo = self.clone();
        echo.f = spec.f.to_string();
        echo.g = spec.g.to_string();
        let problem = validate(spec).map_err(|errs| {
            let lines: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
            CliError::Input(lines.join("\n"))
        })?;
        let growth = self.growth.map(|g| GrowthHypothesis {
            m1: g.m1,
            m2: g.m2,
            m3: g.m3,
            mbar1: g.mbar1,
            mbar2: g.mbar2,
            mbar3: g.mbar3,
        });
        let lipschitz = self.lipschitz.map(|l| LipschitzHypothesis {
            l1_cal: l.l1,
            l2_cal: l.l2,
            l1_zero: l.l1_zero,
            l2_zero: l.l2_zero,
        });
        let mut solver = SolveOptions::default();
        if let Some(s) = &self.solver {
            solver.tol = s.tol.unwrap_or(solver.tol);
            solver.max_iter = s.max_iter.unwrap_or(solver.max_iter);
            solver.theta = s.theta.unwrap_or(solver.theta);
        }
        Ok(Loaded { echo, problem, growth, lipschitz, solver })
    }
}

pub fn read(path: &Path) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    ProblemFile::from_json(&text)?.load()
}
