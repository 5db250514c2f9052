//! Run configuration: a TOML document naming the suites, the matrices (inline
//! rows, CSV files, or generated ensembles), seeds, tolerances and budgets.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use susy_gci::covariance::CovarianceInterpolation;
use susy_gci::ensemble::ensemble_member;
use susy_gci::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Identities,
    #[serde(rename = "lemmaA")]
    LemmaA,
    Gci,
    Gamma,
    Reduction,
    Decomposition,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Identities, Suite::LemmaA, Suite::Gci, Suite::Gamma, Suite::Reduction, Suite::Decomposition];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::LemmaA => "lemmaA",
            Suite::Gci => "gci",
            Suite::Gamma => "gamma",
            Suite::Reduction => "reduction",
            Suite::Decomposition => "decomposition",
        }
    }

    pub fn parse(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A covariance given inline or as a CSV file of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    pub n1: usize,
}

/// Generated correlation matrices appended to the matrix list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub n: usize,
    pub n1: usize,
    pub count: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    /// Points of the `tau` profile in the gci suite.
    pub grid_points: usize,
    /// Points of the `tau` profile in the gamma suite.
    pub gamma_grid_points: usize,
    pub qmc_points: usize,
    pub qmc_randomizations: usize,
    pub mc_samples: usize,
    pub slice_samples: usize,
    /// Random rational instances per exact identity.
    pub identity_samples: usize,
    pub fd_step: f64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            grid_points: 21,
            gamma_grid_points: 6,
            qmc_points: 1024,
            qmc_randomizations: 32,
            mc_samples: 400_000,
            slice_samples: 1_000_000,
            identity_samples: 50,
            fd_step: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Lower bound accepted for `a_J(tau)`.
    pub positivity_floor: f64,
    /// Relative agreement of the two `a_J` routes in floating point.
    pub route_rel: f64,
    /// Localization / reduction agreement.
    pub reduction_abs: f64,
    /// Endpoint factorization of the quadrature profile.
    pub endpoint_abs: f64,
    pub decomposition_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            positivity_floor: -1e-12,
            route_rel: 1e-9,
            reduction_abs: 1e-8,
            endpoint_abs: 1e-8,
            decomposition_rel: 0.1,
        }
    }
}

fn default_suites() -> Vec<Suite> {
    Suite::ALL.to_vec()
}

fn default_seed() -> u64 {
    20_170_101
}

fn default_tau_grid() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}

fn default_gamma_k() -> Vec<usize> {
    vec![1, 2, 3]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_suites")]
    pub suites: Vec<Suite>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// `tau` values for the decomposition suite.
    #[serde(default = "default_tau_grid")]
    pub tau_grid: Vec<f64>,
    #[serde(default = "default_gamma_k")]
    pub gamma_k: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Optional CSV of all `tau` profiles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_csv: Option<PathBuf>,
    #[serde(default)]
    pub budget: Budgets,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub matrices: Vec<MatrixSpec>,
    #[serde(default)]
    pub ensembles: Vec<EnsembleSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            suites: default_suites(),
            seed: default_seed(),
            tau_grid: default_tau_grid(),
            gamma_k: default_gamma_k(),
            out: None,
            profile_csv: None,
            budget: Budgets::default(),
            tolerances: Tolerances::default(),
            matrices: Vec::new(),
            ensembles: Vec::new(),
        }
    }
}

/// Validation failure listing every offending field.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub issues: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for issue in &self.issues {
            writeln!(f, "  - {issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn single(msg: impl Into<String>) -> Self {
        ConfigError { issues: vec![msg.into()] }
    }
}

/// A validated matrix ready for the suites.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedCovariance {
    pub name: String,
    pub ci: CovarianceInterpolation<f64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::single(format!("parse error: {}", e.message().trim())))
    }

    /// Reads a config file. Relative matrix CSV, `out` and `profile_csv` paths
    /// are taken relative to the file.
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), ConfigError> {
        let bytes = fs::read(path).map_err(|e| ConfigError::single(format!("config {}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|_| ConfigError::single("config is not UTF-8"))?;
        let mut config = Self::parse(text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(rel) = p.as_ref().filter(|p| p.is_relative()) {
                *p = Some(base.join(rel));
            }
        };
        for m in &mut config.matrices {
            resolve(&mut m.csv);
        }
        resolve(&mut config.out);
        resolve(&mut config.profile_csv);
        Ok((config, bytes))
    }

    /// Checks scalar fields and resolves every matrix; all problems are reported together.
    pub fn validate(&self) -> Result<Vec<NamedCovariance>, ConfigError> {
        let mut issues = Vec::new();
        if self.suites.is_empty() {
            issues.push("suites: at least one suite is required".to_string());
        }
        for (i, t) in self.tau_grid.iter().enumerate() {
            if !(*t > 0.0 && *t < 1.0) {
                issues.push(format!("tau_grid[{i}]: {t} is not in (0, 1)"));
            }
        }
        for (i, k) in self.gamma_k.iter().enumerate() {
            if *k == 0 {
                issues.push(format!("gamma_k[{i}]: k must be >= 1"));
            }
        }
        let b = &self.budget;
        if b.grid_points < 2 {
            issues.push("budget.grid_points: need at least 2".into());
        }
        if b.gamma_grid_points < 2 {
            issues.push("budget.gamma_grid_points: need at least 2".into());
        }
        if b.qmc_points == 0 {
            issues.push("budget.qmc_points: must be positive".into());
        }
        if b.qmc_randomizations < 2 {
            issues.push("budget.qmc_randomizations: need at least 2".into());
        }
        if b.mc_samples == 0 {
            issues.push("budget.mc_samples: must be positive".into());
        }
        if b.slice_samples == 0 {
            issues.push("budget.slice_samples: must be positive".into());
        }
        if !(b.fd_step > 0.0 && b.fd_step <= 0.25) {
            issues.push(format!("budget.fd_step: {} is not in (0, 0.25]", b.fd_step));
        }
        let t = &self.tolerances;
        if t.decomposition_rel.is_nan() || t.decomposition_rel <= 0.0 {
            issues.push("tolerances.decomposition_rel: must be positive".into());
        }

        let mut out = Vec::new();
        let mut names = std::collections::BTreeSet::new();
        for (i, spec) in self.matrices.iter().enumerate() {
            let field = format!("matrices[{i}] ({})", spec.name);
            if !names.insert(spec.name.clone()) {
                issues.push(format!("{field}: duplicate name"));
            }
            let rows = match (&spec.rows, &spec.csv) {
                (Some(rows), None) => Ok(rows.clone()),
                (None, Some(path)) => read_csv_rows(path),
                (Some(_), Some(_)) => Err("give either rows or csv, not both".to_string()),
                (None, None) => Err("missing rows or csv".to_string()),
            };
            match rows.and_then(|r| check_matrix(r, spec.n1)) {
                Ok(ci) => out.push(NamedCovariance { name: spec.name.clone(), ci }),
                Err(e) => issues.push(format!("{field}: {e}")),
            }
        }
        for (i, e) in self.ensembles.iter().enumerate() {
            let field = format!("ensembles[{i}]");
            if e.count == 0 {
                issues.push(format!("{field}.count: must be >= 1"));
            }
            if e.n < 2 || e.n > 12 {
                issues.push(format!("{field}.n: {} is not in 2..=12", e.n));
                continue;
            }
            if e.n1 == 0 || e.n1 >= e.n {
                issues.push(format!("{field}.n1: need 1 <= n1 < n"));
                continue;
            }
            for spec in generate_ensemble(e.n, e.n1, e.count, e.seed) {
                match check_matrix(spec.rows.clone().expect("inline"), spec.n1) {
                    Ok(ci) => out.push(NamedCovariance { name: spec.name, ci }),
                    Err(err) => issues.push(format!("{field}: {err}")),
                }
            }
        }
        if issues.is_empty() {
            Ok(out)
        } else {
            Err(ConfigError { issues })
        }
    }
}

fn read_csv_rows(path: &Path) -> Result<Vec<Vec<f64>>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    reader
        .records()
        .map(|rec| {
            let rec = rec.map_err(|e| format!("{}: {e}", path.display()))?;
            rec.iter()
                .map(|v| v.parse::<f64>().map_err(|_| format!("{}: bad number {v:?}", path.display())))
                .collect()
        })
        .collect()
}

fn check_matrix(rows: Vec<Vec<f64>>, n1: usize) -> Result<CovarianceInterpolation<f64>, String> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err("matrix is not square".into());
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err("matrix has non-finite entries".into());
    }
    if n1 == 0 || n1 >= n {
        return Err(format!("n1 = {n1} must satisfy 1 <= n1 < n = {n}"));
    }
    let m = Matrix::from_rows(rows).map_err(|e| e.to_string())?;
    if !m.is_symmetric(1e-12) {
        return Err("matrix is not symmetric within 1e-12".into());
    }
    CovarianceInterpolation::new(m, n1).map_err(|e| e.to_string())
}

/// Reproducible correlation ensemble as inline matrix specs.
pub fn generate_ensemble(n: usize, n1: usize, count: usize, seed: u64) -> Vec<MatrixSpec> {
    (0..count)
        .map(|k| MatrixSpec {
            name: format!("ensemble-n{n}-s{seed}-{k}"),
            rows: Some(ensemble_member(n, seed, k).to_rows()),
            csv: None,
            n1,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c.suites, Suite::ALL.to_vec());
        assert_eq!(c.budget.grid_points, 21);
    }

    #[test]
    fn inline_matrix() {
        let c = RunConfig::parse(
            r#"
            suites = ["gci", "lemmaA"]
            [[matrices]]
            name = "m"
            rows = [[1.0, 0.5], [0.5, 1.0]]
            n1 = 1
            "#,
        )
        .unwrap();
        assert_eq!(c.suites, vec![Suite::Gci, Suite::LemmaA]);
        let ms = c.validate().unwrap();
        assert_eq!(ms[0].ci.n(), 2);
    }

    #[test]
    fn validation_lists_every_issue() {
        let c = RunConfig::parse(
            r#"
            tau_grid = [0.5, 1.5]
            [budget]
            grid_points = 1
            [[matrices]]
            name = "asym"
            rows = [[1.0, 0.5], [0.4, 1.0]]
            n1 = 1
            [[matrices]]
            name = "split"
            rows = [[1.0, 0.0], [0.0, 1.0]]
            n1 = 2
            "#,
        )
        .unwrap();
        let err = c.validate().unwrap_err();
        assert_eq!(err.issues.len(), 4, "{err}");
        assert!(err.to_string().contains("tau_grid[1]"));
        assert!(err.to_string().contains("symmetric"));
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(RunConfig::parse("suite = [\"gci\"]").is_err());
        assert!(RunConfig::parse("suites = [\"nope\"]").is_err());
    }

    #[test]
    fn ensemble_specs() {
        let a = generate_ensemble(2, 1, 3, 9);
        assert_eq!(a, generate_ensemble(2, 1, 3, 9));
        for s in &a {
            let rows = s.rows.as_ref().unwrap();
            assert_eq!(rows[0][0], 1.0);
            assert_eq!(rows[1][1], 1.0);
        }
    }
}
