//! Flat key-value run configuration.
//!
//! One `key = value` pair per line; `#` starts a comment; blank lines are
//! ignored. Keys live in the namespaces `geometry.*`, `params.*`, `grid.*`,
//! `sweep.*` and `tolerances.*`; unknown keys, duplicate keys and an empty
//! configuration are rejected. Lists are comma separated; lists of boundary
//! points are `;` separated. The resolved configuration (every key, with
//! defaults filled in, sorted) is what gets echoed and hashed.

use std::collections::BTreeMap;

use crate::electrostatics::PsiVariant;
use crate::error::{Error, Result};
use crate::functional::{PeakOptions, RunSettings};
use crate::geometry::{BoundaryPoint, CurvatureBump, Geometry, GeometryKind, SyntheticSpec};
use crate::params::ModelParams;
use crate::reduction::{GridSpec, ReductionOptions};

/// Every recognised key with its default (`None`: required or
/// kind-dependent) and a one-line description.
pub const KEYS: &[(&str, Option<&str>, &str)] = &[
    ("geometry.kind", None, "flat | umbilic | synthetic | ball | spheroid"),
    ("geometry.kappa", Some("0"), "umbilic: h = κ Id"),
    ("geometry.h", None, "synthetic: (n-1)² row-major entries of h"),
    ("geometry.quadratic", Some("0"), "synthetic: coefficient of the |ȳ|² metric term"),
    ("geometry.bump_amplitude", Some("0"), "synthetic: amplitude of a Gaussian bump added to h"),
    ("geometry.bump_center", None, "synthetic: bump centre (n-1 coordinates)"),
    ("geometry.bump_width", Some("1"), "synthetic: bump width"),
    ("geometry.radius", Some("1"), "ball radius"),
    ("geometry.a", Some("1"), "spheroid equatorial semi-axis"),
    ("geometry.c", Some("1.5"), "spheroid polar semi-axis"),
    ("geometry.xi", None, "evaluation point: n-1 flat coordinates or theta,phi"),
    ("geometry.seeds", None, "peak-search seeds, ';' separated points (default: xi)"),
    ("params.n", Some("3"), "dimension (3 or 4)"),
    ("params.p", Some("4"), "nonlinearity exponent"),
    ("params.omega", Some("0"), "phase frequency ω"),
    ("params.a", None, "potential coefficient (default 1 + ω², i.e. mass 1)"),
    ("params.q", Some("1"), "charge q"),
    ("params.variant", Some("neumann_proca"), "second equation: neumann_proca | dirichlet"),
    ("grid.radius", Some("1"), "Fermi chart radius R"),
    ("grid.h_div", Some("6"), "core spacing ε / h_div (≥ 6)"),
    ("grid.core_z", Some("3"), "uniform core half-width in units of ε"),
    ("grid.growth", Some("1.25"), "geometric growth of the outer spacing"),
    ("grid.z_max", Some("3"), "compact set |z| ≤ z_max of the γ comparison"),
    ("sweep.eps", None, "ε values, comma separated, decreasing"),
    ("sweep.samples", Some("50"), "psi-check: number of random fields"),
    ("sweep.seed", Some("1"), "psi-check: RNG seed"),
    ("tolerances.ground_state", Some("1e-10"), "ground-state shooting tolerance"),
    ("tolerances.reduction", Some("1e-9"), "fixed-point stopping tolerance"),
    ("tolerances.max_iter", Some("40"), "fixed-point iteration limit"),
    ("tolerances.krylov", Some("1e-11"), "relative tolerance of linear solves"),
    ("tolerances.peak_grad_factor", Some("1"), "peak search stops at |∇Ĩ| < factor · ε²"),
    ("tolerances.peak_step", Some("0.05"), "peak search step c"),
    ("tolerances.peak_max_iter", Some("60"), "peak search iteration limit"),
];

/// Parsed but untyped key-value pairs.
pub type RawConfig = BTreeMap<String, String>;

fn invalid(msg: impl Into<String>) -> Error {
    Error::ConfigInvalid(msg.into())
}

/// Tokenise configuration text into key-value pairs.
pub fn parse_raw(text: &str) -> Result<RawConfig> {
    let mut out = RawConfig::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| invalid(format!("line {}: expected key = value", ln + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.iter().any(|(name, _, _)| *name == k) {
            return Err(invalid(format!("line {}: unknown key '{k}'", ln + 1)));
        }
        if v.is_empty() {
            return Err(invalid(format!("line {}: empty value for '{k}'", ln + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(invalid(format!("line {}: duplicate key '{k}'", ln + 1)));
        }
    }
    if out.is_empty() {
        return Err(invalid("empty configuration"));
    }
    Ok(out)
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| invalid(format!("{key}: '{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(invalid(format!("{key}: non-finite value")));
    }
    Ok(v)
}

fn parse_list(key: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|t| parse_f64(key, t)).collect()
}

fn parse_usize(key: &str, s: &str, max: usize) -> Result<usize> {
    let v: usize = s.trim().parse().map_err(|_| invalid(format!("{key}: '{s}' is not a non-negative integer")))?;
    if v > max {
        return Err(invalid(format!("{key}: {v} exceeds {max}")));
    }
    Ok(v)
}

/// A fully resolved, validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub geometry: Geometry,
    pub xi: BoundaryPoint,
    pub seeds: Vec<BoundaryPoint>,
    pub params: ModelParams,
    pub settings: RunSettings,
    pub eps: Vec<f64>,
    pub gs_tol: f64,
    pub peak: PeakOptions,
    pub samples: usize,
    pub seed: u64,
    pub z_max: f64,
    resolved: RawConfig,
}

impl Config {
    /// Parse and validate configuration text.
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_raw(parse_raw(text)?)
    }

    /// Resolve defaults and validate.
    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let mut r = raw;
        let omega = parse_f64("params.omega", r.get("params.omega").map_or("0", |s| s.as_str()))?;
        let default_a = format!("{}", 1.0 + omega * omega);
        for (k, d, _) in KEYS {
            if let Some(d) = d {
                r.entry(k.to_string()).or_insert_with(|| d.to_string());
            }
        }
        r.entry("params.a".into()).or_insert(default_a);
        let get = |k: &str| -> Result<&str> { r.get(k).map(|s| s.as_str()).ok_or_else(|| invalid(format!("missing key '{k}'"))) };
        let num = |k: &str| -> Result<f64> { parse_f64(k, get(k)?) };

        let n = parse_usize("params.n", get("params.n")?, 4)?;
        let params = ModelParams::new(n, num("params.p")?, num("params.a")?, omega, num("params.q")?).map_err(|e| invalid(e.to_string()))?;
        let variant = PsiVariant::parse(get("params.variant")?).ok_or_else(|| invalid("params.variant must be neumann_proca or dirichlet"))?;

        let kind = get("geometry.kind")?;
        let geometry = match kind {
            "flat" => Geometry::flat(n),
            "umbilic" => Geometry::umbilic(n, num("geometry.kappa")?),
            "synthetic" => {
                let d = n - 1;
                let flat = parse_list("geometry.h", get("geometry.h")?)?;
                if flat.len() != d * d {
                    return Err(invalid(format!("geometry.h needs {} entries", d * d)));
                }
                let h = flat.chunks(d).map(|c| c.to_vec()).collect();
                let amplitude = num("geometry.bump_amplitude")?;
                let bump = if amplitude != 0.0 {
                    let center = parse_list("geometry.bump_center", get("geometry.bump_center")?)?;
                    Some(CurvatureBump { amplitude, center, width: num("geometry.bump_width")? })
                } else {
                    None
                };
                Geometry { n, kind: GeometryKind::Synthetic(SyntheticSpec { h, quadratic: num("geometry.quadratic")?, bump }) }
            }
            "ball" => Geometry::ball(num("geometry.radius")?),
            "spheroid" => Geometry::spheroid(num("geometry.a")?, num("geometry.c")?),
            other => return Err(invalid(format!("geometry.kind '{other}' unknown"))),
        };
        if geometry.n != n {
            return Err(invalid(format!("geometry '{kind}' needs params.n = {}", geometry.n)));
        }
        geometry.validate().map_err(|e| invalid(e.to_string()))?;

        let point = |key: &str, s: &str| -> Result<BoundaryPoint> {
            let c = parse_list(key, s)?;
            let p = match (&geometry.kind, c.as_slice()) {
                (GeometryKind::Synthetic(_), _) => BoundaryPoint::Flat(c),
                (_, [theta, phi]) => BoundaryPoint::Angles { theta: *theta, phi: *phi },
                _ => return Err(invalid(format!("{key}: surface points are theta,phi"))),
            };
            p.check(&geometry).map_err(|e| invalid(format!("{key}: {e}")))?;
            Ok(p)
        };
        let default_xi = match geometry.kind {
            GeometryKind::Synthetic(_) => vec!["0"; n - 1].join(","),
            _ => "0,0".into(),
        };
        let xi_text = r.get("geometry.xi").cloned().unwrap_or(default_xi);
        let xi = point("geometry.xi", &xi_text)?;
        let seeds = match r.get("geometry.seeds") {
            Some(s) => s.split(';').map(|t| point("geometry.seeds", t)).collect::<Result<Vec<_>>>()?,
            None => vec![xi.clone()],
        };

        let grid = GridSpec { h_div: num("grid.h_div")?, core_z: num("grid.core_z")?, growth: num("grid.growth")? };
        if !(grid.h_div >= 6.0 && grid.h_div <= 64.0) || !(grid.core_z > 0.0 && grid.core_z <= 50.0) || !(grid.growth >= 1.0 && grid.growth <= 4.0) {
            return Err(invalid("grid: need 6 ≤ h_div ≤ 64, 0 < core_z ≤ 50, 1 ≤ growth ≤ 4"));
        }
        let radius = num("grid.radius")?;
        if !(radius > 0.0) {
            return Err(invalid("grid.radius must be positive"));
        }
        let tol = num("tolerances.reduction")?;
        let krylov_tol = num("tolerances.krylov")?;
        let gs_tol = num("tolerances.ground_state")?;
        for (k, v) in [("tolerances.reduction", tol), ("tolerances.krylov", krylov_tol), ("tolerances.ground_state", gs_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(invalid(format!("{k} must lie in (0, 1)")));
            }
        }
        let opts = ReductionOptions { grid, variant, tol, max_iter: parse_usize("tolerances.max_iter", get("tolerances.max_iter")?, 10_000)?, krylov_tol };
        let eps = match r.get("sweep.eps") {
            Some(s) => parse_list("sweep.eps", s)?,
            None => Vec::new(),
        };
        if eps.iter().any(|e| !(*e > 0.0 && *e < radius)) {
            return Err(invalid("sweep.eps values must lie in (0, grid.radius)"));
        }
        let peak = PeakOptions {
            grad_factor: num("tolerances.peak_grad_factor")?,
            ascent_step: num("tolerances.peak_step")?,
            max_iter: parse_usize("tolerances.peak_max_iter", get("tolerances.peak_max_iter")?, 10_000)?,
        };
        if !(peak.grad_factor > 0.0) || !(peak.ascent_step > 0.0) {
            return Err(invalid("peak tolerances must be positive"));
        }
        let z_max = num("grid.z_max")?;
        if !(z_max > 0.0) {
            return Err(invalid("grid.z_max must be positive"));
        }
        let samples = parse_usize("sweep.samples", get("sweep.samples")?, 100_000)?;
        let seed = get("sweep.seed")?.parse().map_err(|_| invalid("sweep.seed must be an unsigned integer"))?;
        r.insert("geometry.xi".into(), xi_text);
        Ok(Config {
            geometry,
            xi,
            seeds,
            params,
            settings: RunSettings { radius, opts },
            eps,
            gs_tol,
            peak,
            samples,
            seed,
            z_max,
            resolved: r,
        })
    }

    /// The resolved configuration as sorted `key = value` lines.
    pub fn resolved_text(&self) -> String {
        self.resolved.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Resolved key-value pairs.
    pub fn resolved(&self) -> &RawConfig {
        &self.resolved
    }

    /// The sweep, or an error if the subcommand needs one and none is given.
    pub fn require_eps(&self, need: usize) -> Result<&[f64]> {
        if self.eps.len() < need {
            return Err(Error::ConfigInvalid(format!("sweep.eps lists {} value(s), this study needs at least {need}", self.eps.len())));
        }
        Ok(&self.eps)
    }
}
