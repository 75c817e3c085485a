//! Command execution. Everything is computed in memory first; files are
//! written only once the whole run has succeeded.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use qcrit_core::dissipative::{
    classify_phase, covariance_steady_state, dissipative_duration, dissipative_prefactor, dissipative_qfi, m_normal,
    m_superradiant, stability_of, DissipationRates, RabiCovarianceParams, SuperradiantStatus, TwoPhotonParams,
};
use qcrit_core::fit::loglog_fit;
use qcrit_core::fock::{build_hamiltonian, diagonalize, HamiltonianKind, ModelParams};
use qcrit_core::gaussian::{
    mean_photon_number, metrological_advantage, GaussianState, Strategy, VBranch, WilliamsonParams,
};
use qcrit_core::linalg::{c, CMat, CVec};
use qcrit_core::protocol::{adiabatic_excitation, protocol_report, tau4_scaling, AdiabaticRoute, RampSchedule};
use qcrit_core::sw::{concordance, sw_transform, ClosedForm, Generators, ModelClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::*;
use crate::table::{PlotHint, Table};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Core(qcrit_core::Error),
    Io(std::io::Error),
}

impl RunError {
    /// 1 config or IO, 2 domain, 3 convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io(_) => 1,
            RunError::Core(e) if e.is_convergence() || matches!(e, qcrit_core::Error::Numerical(_)) => 3,
            RunError::Core(_) => 2,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}
impl From<qcrit_core::Error> for RunError {
    fn from(e: qcrit_core::Error) -> Self {
        RunError::Core(e)
    }
}
impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

type Result<T> = std::result::Result<T, RunError>;

/// Validity of one grid point, echoed into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointFlag {
    pub index: usize,
    pub point: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// File stem; the run writes `<stem>.csv` and `<stem>.gp`.
    pub stem: String,
    pub table: Table,
    pub plot: PlotHint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub datasets: Vec<Dataset>,
    pub summary: Value,
    pub points: Vec<PointFlag>,
}

/// QCRIT_THREADS, or the available parallelism when unset.
pub fn threads_from_env() -> std::result::Result<usize, ConfigError> {
    match std::env::var("QCRIT_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(ConfigError {
                path: "QCRIT_THREADS".into(),
                message: format!("must be a positive integer, got `{s}`"),
            }),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Maps `f` over `items` on the current pool. Results keep the input order
/// and the reported error is the first one in that order, so the outcome
/// does not depend on scheduling.
fn par_map<T, R, F>(items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> std::result::Result<R, qcrit_core::Error> + Sync + Send,
{
    let all: Vec<std::result::Result<R, qcrit_core::Error>> = items.par_iter().map(f).collect();
    all.into_iter().map(|r| r.map_err(RunError::Core)).collect()
}

fn grid(path: &str, g: &Grid) -> Result<Vec<f64>> {
    g.values().map_err(|m| RunError::Config(ConfigError { path: path.into(), message: m }))
}

fn fit_json(xs: &[f64], ys: &[f64]) -> Value {
    match loglog_fit(xs, ys) {
        Ok(f) => json!({"slope": f.slope, "intercept": f.intercept, "slope_stderr": f.slope_stderr, "n": f.n}),
        Err(e) => json!({"error": e.to_string()}),
    }
}

pub fn execute(cmd: &Command, threads: usize) -> Result<RunOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| RunError::Io(std::io::Error::other(e.to_string())))?;
    pool.install(|| match cmd {
        Command::Spectrum(c) => spectrum(c),
        Command::PhaseDiagram(c) => phase_diagram(c),
        Command::QfiSweep(c) => match c.protocol {
            Protocol::Critical => qfi_critical(c),
            Protocol::Dissipative => qfi_dissipative(c),
        },
        Command::Adiabatic(c) => adiabatic(c),
        Command::GaussianAdvantage(c) => gaussian_advantage(c),
        Command::SwVerify(c) => sw_verify(c),
        Command::DissipativeSteady(c) => match c.model {
            SteadyModel::RabiCovariance => steady_rabi(c),
            SteadyModel::TwoPhoton => steady_two_photon(c),
        },
    })
}

fn spectrum(c: &SpectrumConfig) -> Result<RunOutput> {
    let kind: HamiltonianKind = c.model.parse()?;
    let gs = grid("g_grid", &c.g_grid)?;
    let spectra = par_map(&gs, |&g| {
        let p = ModelParams::new(c.omega, c.omega_q, g, c.n_qubits)?;
        diagonalize(&build_hamiltonian(kind, &p, c.cutoff)?, c.levels)
    })?;
    let mut t = Table::new(&["g", "level", "energy", "convergence_margin", "converged"]);
    let mut points = Vec::with_capacity(gs.len());
    for (i, (g, s)) in gs.iter().zip(&spectra).enumerate() {
        let mut bad = 0;
        for (k, e) in s.eigenvalues.iter().enumerate() {
            let ok = s.converged(k, c.tolerance);
            bad += usize::from(!ok);
            t.push(vec![(*g).into(), k.into(), (*e).into(), s.convergence_margin[k].into(), ok.into()]);
        }
        points.push(PointFlag {
            index: i,
            point: format!("g={g}"),
            ok: bad == 0,
            note: (bad > 0).then(|| format!("{bad} of {} levels above tolerance", s.eigenvalues.len())),
        });
    }
    let unconverged = points.iter().filter(|p| !p.ok).count();
    let summary = json!({
        "model": kind.name(),
        "cutoff": c.cutoff,
        "points": gs.len(),
        "unconverged_points": unconverged,
        "first_unconverged_g": points.iter().position(|p| !p.ok).map(|i| gs[i]),
    });
    Ok(RunOutput {
        datasets: vec![Dataset { stem: "spectrum".into(), table: t, plot: PlotHint::new("g", &["energy"]) }],
        summary,
        points,
    })
}

fn phase_diagram(c: &PhaseDiagramConfig) -> Result<RunOutput> {
    let gs = grid("g_grid", &c.g_grid)?;
    let os = grid("Omega_grid", &c.omega_q_grid)?;
    let rates = DissipationRates::new(c.kappa, c.gamma_down, c.gamma_phi)?;
    // Ω outer, g inner
    let cells: Vec<(f64, f64)> = os.iter().flat_map(|&o| gs.iter().map(move |&g| (o, g))).collect();
    let verdicts = par_map(&cells, |&(o, g)| {
        classify_phase(&TwoPhotonParams { omega: c.omega, omega_q: o, g, n: c.n_qubits, rates })
    })?;
    let mut t = Table::new(&[
        "g_over_omega",
        "Omega_over_omega",
        "kappa_over_omega",
        "Gamma_down",
        "Gamma_phi",
        "N",
        "label",
        "max_re_eig_normal",
        "max_re_eig_superradiant",
        "marginal",
        "superradiant_physical",
    ]);
    let mut counts = [0usize; 4];
    let mut points = Vec::with_capacity(cells.len());
    for (i, (&(o, g), v)) in cells.iter().zip(&verdicts).enumerate() {
        let letter = v.label.letter();
        counts["NSBI".find(letter).expect("known label")] += 1;
        t.push(vec![
            (g / c.omega).into(),
            (o / c.omega).into(),
            (c.kappa / c.omega).into(),
            c.gamma_down.into(),
            c.gamma_phi.into(),
            c.n_qubits.into(),
            letter.to_string().into(),
            v.max_re_normal.into(),
            v.max_re_superradiant.into(),
            v.marginal.into(),
            v.superradiant_physical.into(),
        ]);
        points.push(PointFlag {
            index: i,
            point: format!("g={g},Omega={o}"),
            ok: !v.marginal,
            note: v.marginal.then(|| "an eigenvalue sits within the stability margin".into()),
        });
    }
    let total = cells.len() as f64;
    let summary = json!({
        "grid": [os.len(), gs.len()],
        "fraction": {
            "N": counts[0] as f64 / total,
            "S": counts[1] as f64 / total,
            "B": counts[2] as f64 / total,
            "I": counts[3] as f64 / total,
        },
        "marginal_points": points.iter().filter(|p| !p.ok).count(),
    });
    Ok(RunOutput {
        datasets: vec![Dataset {
            stem: "phase_diagram".into(),
            table: t,
            plot: PlotHint::new("g_over_omega", &["Omega_over_omega"]),
        }],
        summary,
        points,
    })
}

fn qfi_critical(c: &QfiSweepConfig) -> Result<RunOutput> {
    let eta = c.eta.expect("checked");
    let lams = grid("lambda_grid", c.lambda_grid.as_ref().expect("checked"))?;
    let omega_q = eta * c.omega;
    let gp = (c.omega * omega_q).sqrt() / 2.0;
    let exc = c.excitation.as_ref().map(|e| (route(e.route), e.cutoff));
    let reports = par_map(&lams, |&lam| {
        let s = RampSchedule::new(c.v0, c.omega, gp, lam * gp)?;
        let r = protocol_report(&s, eta, exc)?;
        Ok((s.g_end, r, r.fi_homodyne(0.0)))
    })?;
    let mut t = Table::new(&[
        "g_end",
        "lambda",
        "tau_quadrature",
        "tau_closed_form",
        "qfi",
        "snr",
        "fi_photon",
        "fi_homodyne_x",
        "c2_sq",
        "regime_tag",
    ]);
    let mut points = Vec::with_capacity(lams.len());
    for (i, (g_end, r, fi_x)) in reports.iter().enumerate() {
        t.push(vec![
            (*g_end).into(),
            r.lambda.into(),
            r.tau.quadrature.into(),
            r.tau.closed_form.into(),
            r.qfi.into(),
            r.snr.into(),
            r.fi_photon_number.into(),
            (*fi_x).into(),
            r.c2_final_sq.into(),
            if r.in_window { "quadratic" } else { "outside-window" }.into(),
        ]);
        points.push(PointFlag {
            index: i,
            point: format!("lambda={}", r.lambda),
            ok: r.in_window,
            note: (!r.in_window).then(|| "beyond the quadratic-regime window".into()),
        });
    }
    let fit = match tau4_scaling(c.v0, eta, c.omega, &lams) {
        Ok(s) => json!({
            "slope": s.fit.slope,
            "slope_stderr": s.fit.slope_stderr,
            "slope_quoted_qfi": s.fit_quoted.slope,
            "static_baseline_slope": s.ramsey.slope,
            "points_in_window": s.fit.n,
        }),
        Err(e) => json!({"error": e.to_string()}),
    };
    let summary = json!({"protocol": "critical", "eta": eta, "v0": c.v0, "qfi_vs_tau": fit});
    Ok(RunOutput {
        datasets: vec![Dataset { stem: "qfi_sweep".into(), table: t, plot: PlotHint::new("lambda", &["snr"]) }],
        summary,
        points,
    })
}

fn qfi_dissipative(c: &QfiSweepConfig) -> Result<RunOutput> {
    let base = RabiCovarianceParams {
        omega: c.omega,
        omega_q: c.omega_q.expect("checked"),
        g: 0.0,
        kappa: c.kappa.expect("checked"),
        gamma: c.gamma.expect("checked"),
    };
    base.validate()?;
    let ratios = grid("ratio_grid", c.ratio_grid.as_ref().expect("checked"))?;
    let gd = base.g_p_dissipative();
    let rows = par_map(&ratios, |&r| {
        let p = base.with_g(r * gd);
        let q = dissipative_qfi(&p)?;
        Ok((p.g, dissipative_duration(&p), q, p.within_assumptions()))
    })?;
    let mut t = Table::new(&[
        "g_over_gpd",
        "g",
        "tau",
        "qfi",
        "qfi_squeezing_term",
        "qfi_purity_term",
        "nu",
        "within_assumptions",
    ]);
    let mut points = Vec::with_capacity(ratios.len());
    for (i, (r, (g, tau, q, ok))) in ratios.iter().zip(&rows).enumerate() {
        t.push(vec![
            (*r).into(),
            (*g).into(),
            (*tau).into(),
            q.value.into(),
            q.squeezing_term.into(),
            q.purity_term.into(),
            q.nu.into(),
            (*ok).into(),
        ]);
        points.push(PointFlag {
            index: i,
            point: format!("g_over_gpd={r}"),
            ok: *ok,
            note: (!ok).then(|| "rates outside the perturbative assumptions".into()),
        });
    }
    let taus: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let qfis: Vec<f64> = rows.iter().map(|r| r.2.value).collect();
    let summary = json!({
        "protocol": "dissipative",
        "g_p_dissipative": gd,
        "qfi_vs_tau": fit_json(&taus, &qfis),
        "predicted_prefactor": dissipative_prefactor(&base),
    });
    Ok(RunOutput {
        datasets: vec![Dataset { stem: "qfi_sweep".into(), table: t, plot: PlotHint::new("tau", &["qfi"]).log() }],
        summary,
        points,
    })
}

fn route(r: Route) -> AdiabaticRoute {
    match r {
        Route::Effective => AdiabaticRoute::EffectiveQuadratic,
        Route::FullRabi => AdiabaticRoute::FullRabi,
    }
}

fn adiabatic(c: &AdiabaticConfig) -> Result<RunOutput> {
    let gp = (c.omega * c.eta * c.omega).sqrt() / 2.0;
    let s = RampSchedule::new(c.v0, c.omega, gp, c.lambda_end * gp)?;
    let tr = adiabatic_excitation(&s, c.eta, c.cutoff, route(c.route), c.samples)?;
    let mut t = Table::new(&["t", "lambda", "c2_sq", "ground_sq"]);
    for i in 0..tr.times.len() {
        t.push(vec![tr.times[i].into(), tr.lambdas[i].into(), tr.c2_sq[i].into(), tr.ground_sq[i].into()]);
    }
    let c2 = tr.c2_final_sq();
    let summary = json!({
        "c2_final_sq": c2,
        "predicted_final": tr.predicted_final,
        "ratio_to_prediction": c2 / tr.predicted_final,
        "max_norm_drift": tr.max_norm_drift,
    });
    let ok = tr.max_norm_drift <= 1e-8;
    Ok(RunOutput {
        datasets: vec![Dataset { stem: "adiabatic".into(), table: t, plot: PlotHint::new("t", &["c2_sq"]) }],
        summary,
        points: vec![PointFlag {
            index: 0,
            point: format!("v0={},lambda_end={}", c.v0, c.lambda_end),
            ok,
            note: (!ok).then(|| format!("norm drift {:.3e}", tr.max_norm_drift)),
        }],
    })
}

/// Draws Williamson parameters: ν uniform in [1, ν_max], squeezings and |γ|
/// uniform from zero, angles uniform over a period.
pub fn random_williamson(r: &RandomStates) -> Vec<WilliamsonParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
    (0..r.count)
        .map(|_| WilliamsonParams {
            nu: 1.0 + (r.nu_max - 1.0) * rng.gen::<f64>(),
            phi1: 2.0 * PI * rng.gen::<f64>(),
            phi2: 2.0 * PI * rng.gen::<f64>(),
            theta: PI * rng.gen::<f64>(),
            psi: 2.0 * PI * rng.gen::<f64>(),
            xi1: r.xi_max * rng.gen::<f64>(),
            xi2: r.xi_max * rng.gen::<f64>(),
            gamma_abs: r.gamma_max * rng.gen::<f64>(),
            l: FRAC_PI_2 * rng.gen::<f64>(),
            phi_d1: 2.0 * PI * rng.gen::<f64>(),
            phi_d2: 2.0 * PI * rng.gen::<f64>(),
        })
        .collect()
}

fn explicit_state(
    q: usize,
    sigma: &[[f64; 2]],
    d: &[[f64; 2]],
) -> std::result::Result<GaussianState, qcrit_core::Error> {
    let n = 2 * q;
    let sigma = CMat::from_row_iterator(n, n, sigma.iter().map(|[r, i]| c(*r, *i)));
    let d = CVec::from_iterator(n, d.iter().map(|[r, i]| c(*r, *i)));
    GaussianState::new(q, sigma, d)
}

fn strategy_name(s: Strategy) -> &'static str {
    match s {
        Strategy::OneMode => "one-mode",
        Strategy::MachZehnder => "mach-zehnder",
        Strategy::TheoremBranch(VBranch::NonNegative) => "branch-v-nonnegative",
        Strategy::TheoremBranch(VBranch::NegativeKept) => "branch-v-negative-kept",
        Strategy::TheoremBranch(VBranch::NegativeRotated) => "branch-v-negative-rotated",
        Strategy::EulerSearch => "euler-search",
    }
}

fn gaussian_advantage(c: &GaussianAdvantageConfig) -> Result<RunOutput> {
    enum Src<'a> {
        W(WilliamsonParams),
        Doc(&'a StateDoc),
    }
    let sources: Vec<Src> = match (&c.random, &c.states) {
        (Some(r), _) => random_williamson(r).into_iter().map(Src::W).collect(),
        (None, Some(s)) => s.iter().map(Src::Doc).collect(),
        (None, None) => unreachable!("checked"),
    };
    let reports = par_map(&sources, |src| {
        let state = match src {
            Src::W(w) => w.build()?,
            Src::Doc(d) => match &d.williamson {
                Some(w) => WilliamsonParams::from(*w).build()?,
                None => explicit_state(
                    d.q.expect("checked"),
                    d.sigma.as_deref().expect("checked"),
                    d.d.as_deref().expect("checked"),
                )?,
            },
        };
        let w = WilliamsonParams::decompose(&state)?;
        Ok((w, mean_photon_number(&state), metrological_advantage(&state)?))
    })?;
    let mut t = Table::new(&[
        "index",
        "nu",
        "xi1",
        "xi2",
        "gamma_abs",
        "mean_photons",
        "qfi_opt",
        "qfi_ref",
        "advantage",
        "qfi_sphere",
        "strategy",
        "optimal",
    ]);
    let mut points = Vec::with_capacity(reports.len());
    let mut positive = 0;
    for (i, (w, n, r)) in reports.iter().enumerate() {
        // The sphere value is the exact optimum over passive operations.
        let optimal = r.qfi_sphere - r.qfi_opt <= 1e-8 * r.qfi_sphere.abs().max(1.0);
        positive += usize::from(r.advantage > 1e-10);
        t.push(vec![
            i.into(),
            w.nu.into(),
            w.xi1.into(),
            w.xi2.into(),
            w.gamma_abs.into(),
            (*n).into(),
            r.qfi_opt.into(),
            r.qfi_ref.into(),
            r.advantage.into(),
            r.qfi_sphere.into(),
            strategy_name(r.strategy).into(),
            optimal.into(),
        ]);
        points.push(PointFlag {
            index: i,
            point: format!("state {i}"),
            ok: optimal,
            note: (!optimal).then(|| "reported optimum below the sphere bound".into()),
        });
    }
    let summary = json!({"states": reports.len(), "with_advantage": positive});
    Ok(RunOutput {
        datasets: vec![Dataset {
            stem: "gaussian_advantage".into(),
            table: t,
            plot: PlotHint::new("mean_photons", &["qfi_opt", "qfi_ref"]),
        }],
        summary,
        points,
    })
}

fn sw_verify(c: &SwVerifyConfig) -> Result<RunOutput> {
    let set = if c.generators == "quoted" { Generators::Quoted } else { Generators::Corrected };
    let models: Vec<ModelClass> = c.models.iter().map(|m| m.parse()).collect::<std::result::Result<_, _>>()?;
    let jobs: Vec<(ModelClass, f64)> = models.iter().flat_map(|&m| c.epsilons.iter().map(move |&e| (m, e))).collect();
    let results = par_map(&jobs, |&(m, eps)| {
        let class = m.default_class();
        let r = sw_transform(m, &class, eps, c.lambda, c.order, set)?;
        let conc = if c.order == 4 {
            let form = match set {
                Generators::Quoted => ClosedForm::quoted(m, c.lambda),
                Generators::Corrected => ClosedForm::corrected(m, c.lambda),
            };
            Some(concordance(&r, &class, &form)?)
        } else {
            None
        };
        Ok((r.residual(), r.residual_offdiag_norm[&0], conc))
    })?;
    let mut t = Table::new(&[
        "model",
        "epsilon",
        "order",
        "residual",
        "residual_untransformed",
        "concordance_deviation",
        "concordance_tolerance",
        "concordance",
    ]);
    let mut points = Vec::with_capacity(jobs.len());
    for (i, (&(m, eps), (res, bare, conc))) in jobs.iter().zip(&results).enumerate() {
        t.push(vec![
            m.name().into(),
            eps.into(),
            c.order.into(),
            (*res).into(),
            (*bare).into(),
            conc.map(|k| k.max_deviation).into(),
            conc.map(|k| k.tolerance).into(),
            conc.map(|k| k.passed()).into(),
        ]);
        let ok = conc.map_or(true, |k| k.passed());
        points.push(PointFlag {
            index: i,
            point: format!("{} eps={eps}", m.name()),
            ok,
            note: (!ok).then(|| "block-diagonal part outside the closed-form tolerance".into()),
        });
    }
    let mut exponents = serde_json::Map::new();
    for &m in &models {
        let (eps, res): (Vec<f64>, Vec<f64>) =
            jobs.iter().zip(&results).filter(|((mm, _), _)| *mm == m).map(|(&(_, e), r)| (e, r.0)).unzip();
        exponents.insert(m.name().into(), fit_json(&eps, &res));
    }
    let summary = json!({
        "lambda": c.lambda,
        "order": c.order,
        "generators": c.generators,
        "residual_exponent": exponents,
    });
    Ok(RunOutput {
        datasets: vec![Dataset {
            stem: "sw_verify".into(),
            table: t,
            plot: PlotHint::new("epsilon", &["residual"]).log(),
        }],
        summary,
        points,
    })
}

fn steady_rabi(c: &DissipativeSteadyConfig) -> Result<RunOutput> {
    let base = RabiCovarianceParams {
        omega: c.omega,
        omega_q: c.omega_q,
        g: 0.0,
        kappa: c.kappa,
        gamma: c.gamma.expect("checked"),
    };
    base.validate()?;
    let ratios = grid("ratio_grid", c.ratio_grid.as_ref().expect("checked"))?;
    let gd = base.g_p_dissipative();
    let states = par_map(&ratios, |&r| {
        let p = base.with_g(r * gd);
        Ok((p.g, covariance_steady_state(&p)?))
    })?;
    let mut t = Table::new(&[
        "g_over_gpd",
        "g",
        "sigma_xx",
        "sigma_xp",
        "sigma_pp",
        "nu",
        "slowest_rate",
        "route_deviation",
        "within_assumptions",
    ]);
    let mut points = Vec::with_capacity(ratios.len());
    for (i, (r, (g, s))) in ratios.iter().zip(&states).enumerate() {
        let dev = (s.sigma_lyapunov - s.sigma_explicit).amax();
        t.push(vec![
            (*r).into(),
            (*g).into(),
            s.sigma[(0, 0)].into(),
            s.sigma[(0, 1)].into(),
            s.sigma[(1, 1)].into(),
            (2.0 * s.sigma.determinant().sqrt()).into(),
            s.slowest_rate.into(),
            dev.into(),
            s.within_assumptions.into(),
        ]);
        points.push(PointFlag {
            index: i,
            point: format!("g_over_gpd={r}"),
            ok: s.within_assumptions,
            note: (!s.within_assumptions).then(|| "rates outside the perturbative assumptions".into()),
        });
    }
    let summary = json!({"model": "rabi-covariance", "g_p_dissipative": gd, "g_p": base.g_p()});
    Ok(RunOutput {
        datasets: vec![Dataset {
            stem: "dissipative_steady".into(),
            table: t,
            plot: PlotHint::new("g_over_gpd", &["sigma_xx", "sigma_pp"]),
        }],
        summary,
        points,
    })
}

fn status_name(s: SuperradiantStatus) -> &'static str {
    match s {
        SuperradiantStatus::Present => "present",
        SuperradiantStatus::Complex => "complex",
        SuperradiantStatus::DegenerateAtZeroDecay { .. } => "degenerate-zero-decay",
    }
}

fn steady_two_photon(c: &DissipativeSteadyConfig) -> Result<RunOutput> {
    let rates = DissipationRates::new(c.kappa, c.gamma_down.expect("checked"), c.gamma_phi.expect("checked"))?;
    let n = c.n_qubits.expect("checked");
    let gs = grid("g_grid", c.g_grid.as_ref().expect("checked"))?;
    let solved = par_map(&gs, |&g| {
        let p = TwoPhotonParams { omega: c.omega, omega_q: c.omega_q, g, n, rates };
        let st = qcrit_core::dissipative::two_photon_steady_states(&p)?;
        let phase = classify_phase(&p)?;
        let mut rows = vec![("normal", st.normal, st.residuals[0], stability_of(&m_normal(&p)))];
        for (k, v) in st.superradiant.iter().enumerate() {
            let name = if k == 0 { "superradiant+" } else { "superradiant-" };
            rows.push((name, *v, st.residuals[k + 1], stability_of(&m_superradiant(v, &p))));
        }
        Ok((st.status, phase.label.letter(), rows))
    })?;
    let mut t = Table::new(&[
        "g",
        "solution",
        "X",
        "Y",
        "n_phot",
        "Jx",
        "Jy",
        "Jz",
        "residual",
        "max_re_eig",
        "stable",
        "marginal",
        "physical",
        "phase",
        "superradiant_status",
    ]);
    let mut points = Vec::with_capacity(gs.len());
    let nf = n as f64;
    for (i, (g, (status, letter, rows))) in gs.iter().zip(&solved).enumerate() {
        let mut marginal = false;
        for (name, v, res, stab) in rows {
            marginal |= stab.marginal;
            t.push(vec![
                (*g).into(),
                (*name).into(),
                v.x.into(),
                v.y.into(),
                v.n_phot.into(),
                v.jx.into(),
                v.jy.into(),
                v.jz.into(),
                (*res).into(),
                stab.max_re.into(),
                stab.stable.into(),
                stab.marginal.into(),
                v.is_physical(nf).into(),
                letter.to_string().into(),
                status_name(*status).into(),
            ]);
        }
        points.push(PointFlag {
            index: i,
            point: format!("g={g}"),
            ok: !marginal,
            note: marginal.then(|| "an eigenvalue sits within the stability margin".into()),
        });
    }
    let p0 = TwoPhotonParams { omega: c.omega, omega_q: c.omega_q, g: 0.0, n, rates };
    let summary = json!({"model": "two-photon", "g_p_dissipative": p0.g_p_dissipative(), "N": n});
    Ok(RunOutput {
        datasets: vec![Dataset { stem: "dissipative_steady".into(), table: t, plot: PlotHint::new("g", &["Jz"]) }],
        summary,
        points,
    })
}
