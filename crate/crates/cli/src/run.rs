//! Subcommand implementations and artifact emission.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;
use sha2::{Digest, Sha256};
use spikelab::config::Config;
use spikelab::diagnostics::{gamma_convergence, scaling_suite, Report};
use spikelab::electrostatics::bound_suite;
use spikelab::fields::dump;
use spikelab::functional::{assemble_solution, energies, expansion_fit, find_peak, reduced_value, samples_csv, SolutionReport};
use spikelab::geometry::FermiChart;
use spikelab::ground_state::{compute_constants, solve_ground_state, GroundState};
use spikelab::reduction::{discretize, Reducer, ReductionState};
use spikelab::{Error, Result};

/// Map `f` over `0..len` on `jobs` threads; results are ordered by index.
fn par_map<T: Send, F: Fn(usize) -> Result<T> + Sync>(len: usize, jobs: usize, f: F) -> Result<Vec<T>> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<T>>>> = Mutex::new((0..len).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.min(len.max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= len {
                    break;
                }
                let r = f(i);
                slots.lock().expect("no poisoned workers")[i] = Some(r);
            });
        }
    });
    slots.into_inner().expect("no poisoned workers").into_iter().map(|r| r.expect("every index visited")).collect()
}

struct RunDir(PathBuf);

impl RunDir {
    fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        fs::write(self.0.join(name), contents)?;
        Ok(())
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        self.write(name, serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))? + "\n")
    }

    fn report(&self, rep: &Report) -> Result<()> {
        self.write("report.json", rep.to_json() + "\n")?;
        self.write("summary.csv", rep.summary_csv())?;
        self.write("values.csv", rep.values_csv())
    }
}

/// Execute one subcommand; returns the run directory.
pub fn run(name: &str, config_path: &Path, out: &Path, jobs: usize) -> Result<PathBuf> {
    let text = fs::read_to_string(config_path).map_err(|e| Error::ConfigInvalid(format!("{}: {e}", config_path.display())))?;
    let cfg = Config::parse(&text)?;
    let resolved = cfg.resolved_text();
    let hash = Sha256::digest(resolved.as_bytes());
    let tag: String = hash.iter().take(8).map(|b| format!("{b:02x}")).collect();
    let dir = out.join(format!("{name}-{tag}"));
    fs::create_dir_all(&dir)?;
    let rd = RunDir(dir.clone());
    rd.write("config.resolved", &resolved)?;
    let gs = solve_ground_state(&cfg.params, cfg.gs_tol)?;
    match name {
        "ground-state" => ground_state(&rd, &gs)?,
        "constants" => rd.json("constants.json", &compute_constants(&gs)?)?,
        "psi-check" => psi_check(&rd, &cfg)?,
        "reduce" => reduce(&rd, &cfg, &gs, jobs)?,
        "expansion" => expansion(&rd, &cfg, &gs, jobs)?,
        "peak-scan" => peak_scan(&rd, &cfg, &gs, jobs)?,
        "diagnostics" => {
            let (rep, samples) = scaling_suite("scaling", &cfg.geometry, &cfg.xi, cfg.require_eps(4)?, &gs, &cfg.params, &cfg.settings)?;
            rd.report(&rep)?;
            rd.json("samples.json", &samples)?;
        }
        "gamma" => {
            let (rep, samples) = gamma_convergence(&cfg.geometry, &cfg.xi, &gs, cfg.require_eps(3)?, &cfg.params, &cfg.settings, cfg.z_max)?;
            rd.report(&rep)?;
            rd.json("samples.json", &samples)?;
        }
        other => return Err(Error::ConfigInvalid(format!("unknown subcommand '{other}'"))),
    }
    Ok(dir)
}

#[derive(Serialize)]
struct GroundStateSummary {
    n: usize,
    p: f64,
    msq: f64,
    v0: f64,
    r_max: f64,
    r_match: f64,
    decay_c: f64,
    nehari_defect: f64,
}

fn ground_state(rd: &RunDir, gs: &GroundState) -> Result<()> {
    rd.write("profile.csv", gs.to_csv())?;
    rd.json(
        "ground_state.json",
        &GroundStateSummary {
            n: gs.params.n,
            p: gs.params.p,
            msq: gs.params.msq(),
            v0: gs.v0(),
            r_max: gs.r_max,
            r_match: gs.r_match,
            decay_c: gs.decay_c,
            nehari_defect: gs.nehari_defect(),
        },
    )
}

fn psi_check(rd: &RunDir, cfg: &Config) -> Result<()> {
    let eps = cfg.require_eps(1)?[0];
    let chart = FermiChart::new(&cfg.geometry, &cfg.xi, cfg.settings.radius)?;
    let disc = discretize(&chart, eps, &cfg.settings.opts.grid)?;
    let samples = bound_suite(&disc, cfg.params.q, cfg.settings.opts.variant, cfg.settings.opts.krylov_tol, cfg.samples, cfg.seed)?;
    let mut csv = String::from("index,amplitude,min,max,upper,pass\n");
    for s in &samples {
        csv.push_str(&format!("{},{:.12e},{:.12e},{:.12e},{:.12e},{}\n", s.index, s.amplitude, s.min, s.max, s.upper, s.pass));
    }
    rd.write("bounds.csv", csv)?;
    match samples.iter().find(|s| !s.pass) {
        Some(s) => Err(Error::BoundViolation { min: s.min, max: s.max, upper: s.upper }),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct ReduceRecord {
    state: ReductionState,
    energy: spikelab::functional::EnergyBreakdown,
    solution: SolutionReport,
}

fn slice_fixed(n: usize) -> Vec<(usize, f64)> {
    // Plane through the peak spanned by y_1 and the normal y_n.
    (1..n - 1).map(|a| (a, 0.0)).collect()
}

fn reduce(rd: &RunDir, cfg: &Config, gs: &GroundState, jobs: usize) -> Result<()> {
    let eps = cfg.require_eps(1)?;
    let chart = FermiChart::new(&cfg.geometry, &cfg.xi, cfg.settings.radius)?;
    let records = par_map(eps.len(), jobs, |k| {
        let disc = discretize(&chart, eps[k], &cfg.settings.opts.grid)?;
        let red = Reducer::new(&disc, gs, cfg.params, eps[k], cfg.settings.radius, cfg.settings.opts)?;
        let state = red.solve_phi()?;
        let (u, v, solution) = assemble_solution(&red, &state)?;
        let energy = energies(&disc, &u, &state.psi, eps[k], &cfg.params);
        let bc = cfg.settings.opts.variant.boundary();
        let files = vec![
            (format!("u_{k}.spkf"), dump::encode(&disc.grid, spikelab::fields::Boundary::NEUMANN, &u)?),
            (format!("v_{k}.spkf"), dump::encode(&disc.grid, bc, &v)?),
            (format!("u_{k}_slice.csv"), dump::slice_csv(&disc.grid, &u, &slice_fixed(disc.grid.n))?.into_bytes()),
            (format!("v_{k}_slice.csv"), dump::slice_csv(&disc.grid, &v, &slice_fixed(disc.grid.n))?.into_bytes()),
            (format!("trace_{k}.json"), (state.trace_json() + "\n").into_bytes()),
        ];
        Ok((ReduceRecord { state, energy, solution }, files))
    })?;
    let mut csv = String::from("eps,nodes,phi_norm,w_norm,r_norm,n_norm,s_norm,psi_w_h1,orthogonality,gram_condition,J,G,I,residual_u_rel,residual_v\n");
    for (k, (rec, files)) in records.iter().enumerate() {
        for (name, bytes) in files {
            rd.write(name, bytes)?;
        }
        rd.json(&format!("solution_{k}.json"), rec)?;
        let s = &rec.state;
        csv.push_str(&format!(
            "{:.12e},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
            s.eps, s.nodes, s.phi_norm, s.w_norm, s.r_norm, s.n_norm, s.s_norm, s.psi_w_h1, s.orthogonality, s.gram_condition,
            rec.energy.j, rec.energy.g, rec.energy.i, rec.solution.residual_u_rel, rec.solution.residual_v
        ));
    }
    rd.write("summary.csv", csv)
}

fn expansion(rd: &RunDir, cfg: &Config, gs: &GroundState, jobs: usize) -> Result<()> {
    let eps = cfg.require_eps(4)?;
    let samples = par_map(eps.len(), jobs, |k| reduced_value(&cfg.geometry, &cfg.xi, gs, &cfg.params, eps[k], &cfg.settings, false))?;
    rd.write("samples.csv", samples_csv(&samples))?;
    let alpha = compute_constants(gs)?.alpha;
    rd.json("fit.json", &expansion_fit(&samples, alpha)?)
}

fn peak_scan(rd: &RunDir, cfg: &Config, gs: &GroundState, jobs: usize) -> Result<()> {
    let eps = cfg.require_eps(1)?;
    let peaks = par_map(eps.len(), jobs, |k| find_peak(&cfg.geometry, gs, &cfg.params, eps[k], &cfg.settings, &cfg.seeds, &cfg.peak))?;
    let nx = peaks[0].xi.coords().len();
    let mut csv = String::from("eps,");
    for i in 0..nx {
        csv.push_str(&format!("xi_{},", i + 1));
    }
    csv.push_str("I_tilde,grad_norm,tolerance,iterations,");
    for i in 0..nx {
        csv.push_str(&format!("critical_{},", i + 1));
    }
    csv.push_str("distance\n");
    for (k, p) in peaks.iter().enumerate() {
        csv.push_str(&format!("{:.12e},", eps[k]));
        for c in p.xi.coords() {
            csv.push_str(&format!("{c:.12e},"));
        }
        csv.push_str(&format!("{:.12e},{:.12e},{:.12e},{},", p.i_tilde, p.grad_norm, p.tolerance, p.iterations));
        let (crit, dist) = match &p.nearest_critical {
            Some((c, d)) => (c.coords().iter().map(|v| format!("{v:.12e}")).collect::<Vec<_>>(), format!("{d:.12e}")),
            None => (vec![String::new(); nx], String::new()),
        };
        csv.push_str(&format!("{},{dist}\n", crit.join(",")));
        rd.json(&format!("history_{k}.json"), &p.history)?;
    }
    rd.write("peaks.csv", csv)
}
