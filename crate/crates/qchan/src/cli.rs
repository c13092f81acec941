//! Command implementations behind the `qchan` binary: analyze, simulate,
//! verify, gen.
//!
//! Exit codes are a total function of outcome class: 0 success, 1 bound
//! violation, 2 invalid input, 3 inconclusive audit. All randomness is
//! derived from the run seed, wall-clock timing never enters file output,
//! and ensembles iterate in index order, so a repeated run writes identical
//! bytes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::channel::{make_depolarizing, make_random_unitary_mixture, KrausChannel};
use crate::contraction::{
    estimate_contraction_rate, sample_ratio_audit, ContractionMethod, TOL_AUDIT,
};
use crate::dynamics::{
    check_convergence_envelope, check_main_bound, check_sharp_bound, check_streater_bound,
    detect_sharp_class, iterate_orbit, BoundCheckResult, SharpClass,
};
use crate::error::{Error, Result};
use crate::io::{
    audit_summary, channel_to_json, contraction_report, load_channel, load_state, orbit_to_csv,
    state_to_json, AnalysisReport, ChannelJson, StateJson,
};
use crate::mat::{DensityMatrix, Tolerances};
use crate::qubit::king_ruskai_form;
use crate::sample;
use crate::spectral::{commutant_dimension, fixed_space_dimension, spectral_gap, SpectralReport};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_BOUND_VIOLATION: i32 = 1;
pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

/// Where a channel comes from: a file or a named generator.
#[derive(Debug, Clone)]
pub enum ChannelSpec {
    File(PathBuf),
    Depolarizing { dim: usize, p: f64 },
    UnitaryMixture { dim: usize, k: usize, seed: u64 },
}

/// A channel plus what is known about it by construction.
pub struct ResolvedChannel {
    pub channel: KrausChannel,
    pub source: String,
    /// Analytically exact contraction rate, when the family provides one.
    pub exact_c: Option<f64>,
    /// Sharp-class membership known by construction.
    pub sharp_class: Option<SharpClass>,
}

pub fn resolve_channel(spec: &ChannelSpec, tol: &Tolerances) -> Result<ResolvedChannel> {
    match spec {
        ChannelSpec::File(path) => Ok(ResolvedChannel {
            channel: load_channel(path, tol)?,
            source: path.display().to_string(),
            exact_c: None,
            sharp_class: None,
        }),
        ChannelSpec::Depolarizing { dim, p } => Ok(ResolvedChannel {
            channel: make_depolarizing(*dim, *p, tol)?,
            source: format!("depolarizing(dim={dim}, p={p})"),
            exact_c: Some(1.0 - p),
            sharp_class: Some(if *dim == 2 {
                SharpClass::QubitBistochastic
            } else {
                SharpClass::SelfAdjoint
            }),
        }),
        ChannelSpec::UnitaryMixture { dim, k, seed } => Ok(ResolvedChannel {
            channel: make_random_unitary_mixture(*dim, *k, *seed, tol)?,
            source: format!("unitary_mixture(dim={dim}, k={k}, seed={seed})"),
            exact_c: None,
            sharp_class: None,
        }),
    }
}

/// Parses a state argument: `pure_0`, `maximally_mixed`, `random:SEED`, or a
/// path to a state JSON file.
pub fn resolve_state(arg: &str, dim: usize, tol: &Tolerances) -> Result<DensityMatrix> {
    match arg {
        "pure_0" => DensityMatrix::basis_state(dim, 0),
        "maximally_mixed" => Ok(DensityMatrix::maximally_mixed(dim)),
        other => {
            if let Some(seed) = other.strip_prefix("random:") {
                let seed: u64 = seed.parse().map_err(|_| {
                    Error::InvalidParameter(format!("bad random-state seed in {other:?}"))
                })?;
                let mut rng = sample::rng_from(seed);
                Ok(sample::random_density(dim, &mut rng))
            } else {
                let sigma = load_state(Path::new(other), tol)?;
                if sigma.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: sigma.dim(),
                    });
                }
                Ok(sigma)
            }
        }
    }
}

pub struct AnalyzeOptions {
    pub restarts: usize,
    pub trials: usize,
    pub probe_states: usize,
    pub seed: u64,
}

/// Runs the full analysis pipeline on one channel and reports the exit code
/// the outcome maps to.
pub fn run_analyze(
    spec: &ChannelSpec,
    opts: &AnalyzeOptions,
    tol: &Tolerances,
) -> Result<(AnalysisReport, i32)> {
    let resolved = resolve_channel(spec, tol)?;
    let ch = &resolved.channel;
    let mut status = Vec::new();

    let certificate = ch.certify(tol);
    let mut spectral: Option<SpectralReport> = None;
    if certificate.is_bistochastic {
        let commutant = commutant_dimension(ch, tol)?;
        let fixed = fixed_space_dimension(ch, tol)?;
        if commutant != fixed {
            return Err(Error::VerdictMismatch(format!(
                "commutant dimension {commutant} vs fixed-space dimension {fixed}"
            )));
        }
        if commutant == 1 {
            spectral = Some(spectral_gap(ch, tol)?);
        } else {
            status.push(format!(
                "not ergodic (fixed-point space dimension {commutant}); spectral gap and kappa not defined"
            ));
        }
    } else {
        status.push(
            "not bistochastic; ergodicity, spectral gap and entropy-production checks skipped"
                .to_string(),
        );
    }

    let estimate = estimate_contraction_rate(ch, opts.restarts, opts.seed, tol)?;
    let audit = sample_ratio_audit(ch, &estimate, opts.trials, opts.seed, tol)?;
    if !audit.conclusive {
        status.push(format!(
            "contraction audit inconclusive: max sampled ratio {} vs estimate {}",
            audit.max_ratio, audit.estimate.c_lower
        ));
    }
    let estimate = audit.estimate.clone();

    // The rate is exact when the family says so or the qubit path computed
    // it; only then are C-dependent inequalities asserted.
    let (c_eff, c_is_exact) = match resolved.exact_c {
        Some(c) => (c, true),
        None => (
            estimate.c_lower,
            estimate.method == ContractionMethod::QubitExact,
        ),
    };

    // One entry per bound id: the worst-margin check over all probe states.
    let mut worst_checks: Vec<BoundCheckResult> = Vec::new();
    let mut keep_worst = |check: BoundCheckResult| {
        match worst_checks
            .iter_mut()
            .find(|c| c.bound_id == check.bound_id)
        {
            Some(existing) if existing.margin <= check.margin => {}
            Some(existing) => *existing = check,
            None => worst_checks.push(check),
        }
    };
    let mut asserted_violations = 0usize;
    if let Some(sp) = &spectral {
        let sharp_class = match resolved.sharp_class {
            Some(class) => Some(class),
            None => detect_sharp_class(ch, tol)?,
        };
        let strictly_contractive = c_eff < 1.0;
        if !strictly_contractive {
            status.push(format!(
                "contraction rate {c_eff} is not strictly below 1; C-dependent bounds skipped"
            ));
        }
        for i in 0..opts.probe_states {
            let sigma = if i == 0 {
                DensityMatrix::basis_state(ch.dim(), 0)?
            } else {
                let mut rng =
                    sample::rng_from(sample::derive_seed(opts.seed, 0x57A7E + i as u64));
                sample::random_density(ch.dim(), &mut rng)
            };
            let streater = check_streater_bound(ch, &sigma, sp.gap_gamma, tol)?;
            if !streater.satisfied {
                asserted_violations += 1;
            }
            keep_worst(streater);
            if strictly_contractive {
                let main = check_main_bound(ch, &sigma, c_eff, tol)?;
                if c_is_exact && !main.satisfied {
                    asserted_violations += 1;
                }
                keep_worst(main);
                if let Some(class) = sharp_class {
                    let sharp = check_sharp_bound(ch, &sigma, c_eff, class, tol)?;
                    if c_is_exact && !sharp.satisfied {
                        asserted_violations += 1;
                    }
                    keep_worst(sharp);
                }
            }
        }
        if !c_is_exact && strictly_contractive {
            status.push(
                "contraction rate is an optimizer lower bound; C-dependent checks are informational"
                    .to_string(),
            );
        }
        // Exploratory: κ vs √C on exact-rate channels.
        if c_is_exact && sp.kappa > c_eff.sqrt() + tol.tol_eig {
            asserted_violations += 1;
            status.push(format!(
                "kappa {} exceeds sqrt(C) = {}",
                sp.kappa,
                c_eff.sqrt()
            ));
        }
    }

    let exit = if asserted_violations > 0 {
        EXIT_BOUND_VIOLATION
    } else if !audit.conclusive {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    };

    let report = AnalysisReport {
        channel_source: resolved.source,
        certificate,
        spectral,
        contraction: Some(contraction_report(&estimate, c_is_exact)),
        audit: Some(audit_summary(&audit)),
        bound_checks: worst_checks,
        runtime_ms: 0,
        seed: opts.seed,
        tool_version: TOOL_VERSION.to_string(),
        status,
    };
    Ok((report, exit))
}

#[derive(Debug, Serialize)]
pub struct EnvelopeSummary {
    pub c_used: f64,
    pub c_is_exact: bool,
    pub checks: usize,
    pub violations: usize,
    pub worst_margin: f64,
}

#[derive(Debug, Serialize)]
pub struct SimulationSummary {
    pub channel_source: String,
    pub dim: usize,
    pub steps: usize,
    pub initial_state: String,
    pub final_trace_dist: f64,
    pub final_entropy: f64,
    pub entropy_monotone: bool,
    pub envelope: Option<EnvelopeSummary>,
    pub kappa: Option<f64>,
    pub kappa_le_sqrt_c: Option<bool>,
    pub seed: u64,
    pub tool_version: String,
    pub status: Vec<String>,
}

pub struct SimulateOptions {
    pub steps: usize,
    pub state: String,
    pub seed: u64,
}

/// Iterates one orbit; returns the CSV text, the summary, and the exit code.
pub fn run_simulate(
    spec: &ChannelSpec,
    opts: &SimulateOptions,
    tol: &Tolerances,
) -> Result<(String, SimulationSummary, i32)> {
    let resolved = resolve_channel(spec, tol)?;
    let ch = &resolved.channel;
    let cert = ch.certify(tol);
    if !cert.is_bistochastic {
        return Err(Error::NotBistochastic {
            residual: cert.dual_unitality_residual,
            tol: tol.tol_fix,
        });
    }
    let sigma0 = resolve_state(&opts.state, ch.dim(), tol)?;
    let log = iterate_orbit(ch, &sigma0, opts.steps, tol)?;
    let csv = orbit_to_csv(&log)?;

    let mut status = Vec::new();
    let entropy_monotone = log.rows.iter().all(|r| r.delta_s >= -1e-9);
    if !entropy_monotone {
        status.push("entropy decreased along the orbit".to_string());
    }

    // Exact rate when available: family knowledge, else the qubit block norm.
    let (c_eff, c_is_exact) = match resolved.exact_c {
        Some(c) => (Some(c), true),
        None if ch.dim() == 2 => (Some(king_ruskai_form(ch, tol)?.c_exact), true),
        None => (None, false),
    };

    let mut envelope = None;
    if let Some(c) = c_eff {
        if c < 1.0 {
            let checks = check_convergence_envelope(&log, c)?;
            let violations = checks.iter().filter(|c| !c.satisfied).count();
            let worst = checks
                .iter()
                .map(|c| c.margin)
                .fold(f64::INFINITY, f64::min);
            envelope = Some(EnvelopeSummary {
                c_used: c,
                c_is_exact,
                checks: checks.len(),
                violations,
                worst_margin: worst,
            });
        } else {
            status.push("not strictly contractive; envelope checks skipped".to_string());
        }
    } else {
        status.push("no exact contraction rate known; envelope checks skipped".to_string());
    }

    let mut kappa = None;
    let mut kappa_le_sqrt_c = None;
    if commutant_dimension(ch, tol)? == 1 {
        let sp = spectral_gap(ch, tol)?;
        kappa = Some(sp.kappa);
        if let (Some(c), true) = (c_eff.filter(|c| *c < 1.0), c_is_exact) {
            kappa_le_sqrt_c = Some(sp.kappa <= c.sqrt() + tol.tol_eig);
        }
    }

    let mut violations = 0;
    if let Some(env) = &envelope {
        if env.c_is_exact {
            violations += env.violations;
        }
    }
    if !entropy_monotone {
        violations += 1;
    }
    if kappa_le_sqrt_c == Some(false) {
        violations += 1;
    }

    let last = log.rows.last().expect("orbit has at least two rows");
    let summary = SimulationSummary {
        channel_source: resolved.source,
        dim: ch.dim(),
        steps: opts.steps,
        initial_state: opts.state.clone(),
        final_trace_dist: last.trace_dist,
        final_entropy: last.entropy,
        entropy_monotone,
        envelope,
        kappa,
        kappa_le_sqrt_c,
        seed: opts.seed,
        tool_version: TOOL_VERSION.to_string(),
        status,
    };
    let exit = if violations > 0 {
        EXIT_BOUND_VIOLATION
    } else {
        EXIT_OK
    };
    Ok((csv, summary, exit))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyFamily {
    QubitRandom,
    UnitaryMixture,
    Depolarizing,
    QubitProduct,
}

impl VerifyFamily {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "qubit_random" => Ok(VerifyFamily::QubitRandom),
            "unitary_mixture" => Ok(VerifyFamily::UnitaryMixture),
            "depolarizing" => Ok(VerifyFamily::Depolarizing),
            "qubit_product" => Ok(VerifyFamily::QubitProduct),
            other => Err(Error::InvalidParameter(format!(
                "unknown verify family {other:?} (expected qubit_random, unitary_mixture, depolarizing, qubit_product)"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            VerifyFamily::QubitRandom => "qubit_random",
            VerifyFamily::UnitaryMixture => "unitary_mixture",
            VerifyFamily::Depolarizing => "depolarizing",
            VerifyFamily::QubitProduct => "qubit_product",
        }
    }
}

pub struct VerifyOptions {
    pub family: VerifyFamily,
    pub dim: usize,
    pub k: usize,
    pub count: usize,
    pub states: usize,
    pub p: Option<f64>,
    pub seed: u64,
    pub trials: usize,
}

#[derive(Debug, Serialize)]
pub struct ViolatorDump {
    pub channel: ChannelJson,
    pub state: StateJson,
    pub check: BoundCheckResult,
}

#[derive(Debug, Serialize)]
pub struct GapCheckSummary {
    pub checked: usize,
    pub violations: usize,
    /// Worst value of γ − (1 − C); negative would be a violation.
    pub worst_slack: f64,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub family: String,
    pub dim: usize,
    pub count: usize,
    pub states_per_channel: usize,
    pub seed: u64,
    pub channels_run: usize,
    pub checks_run: usize,
    pub violations: usize,
    pub worst_margin_by_bound: BTreeMap<String, f64>,
    pub gap_bound: Option<GapCheckSummary>,
    pub violators: Vec<ViolatorDump>,
    pub tool_version: String,
    pub status: Vec<String>,
}

const MAX_VIOLATOR_DUMPS: usize = 20;

/// Draws a strictly contractive random bistochastic qubit channel,
/// resampling (deterministically) if the mixture lands too close to a
/// unitary conjugation.
fn strictly_contractive_qubit(seed: u64, k: usize, tol: &Tolerances) -> Result<(KrausChannel, f64)> {
    for attempt in 0..64u64 {
        let s = sample::derive_seed(seed, 0xF11 + attempt);
        let ch = make_random_unitary_mixture(2, k, s, tol)?;
        let c = king_ruskai_form(&ch, tol)?.c_exact;
        if c < 0.999_999 {
            return Ok((ch, c));
        }
    }
    Err(Error::InvalidParameter(
        "could not draw a strictly contractive qubit channel".into(),
    ))
}

/// Batch-runs the entropy-production bounds over a seeded ensemble.
pub fn run_verify(opts: &VerifyOptions, tol: &Tolerances) -> Result<(VerifyReport, i32)> {
    let mut status = Vec::new();
    let mut worst: BTreeMap<String, f64> = BTreeMap::new();
    let mut violators: Vec<ViolatorDump> = Vec::new();
    let mut checks_run = 0usize;
    let mut violations = 0usize;
    let mut gap_checked = 0usize;
    let mut gap_violations = 0usize;
    let mut gap_worst = f64::INFINITY;
    let mut inconclusive = false;

    // (channel, exact C if known, sharp class if member, γ check applies)
    struct Member {
        channel: KrausChannel,
        exact_c: Option<f64>,
        sharp_class: Option<SharpClass>,
    }

    let mut members: Vec<Member> = Vec::new();
    match opts.family {
        VerifyFamily::Depolarizing => {
            let ps: Vec<f64> = match opts.p {
                Some(p) => vec![p],
                None => (1..=9).map(|i| i as f64 / 10.0).collect(),
            };
            if opts.p.is_none() {
                status.push("depolarizing family sweeps the default p grid 0.1..0.9".into());
            }
            for p in ps {
                members.push(Member {
                    channel: make_depolarizing(opts.dim, p, tol)?,
                    exact_c: Some(1.0 - p),
                    sharp_class: Some(if opts.dim == 2 {
                        SharpClass::QubitBistochastic
                    } else {
                        SharpClass::SelfAdjoint
                    }),
                });
            }
        }
        VerifyFamily::QubitRandom => {
            for i in 0..opts.count {
                let (channel, c) =
                    strictly_contractive_qubit(sample::derive_seed(opts.seed, i as u64), opts.k, tol)?;
                members.push(Member {
                    channel,
                    exact_c: Some(c),
                    sharp_class: Some(SharpClass::QubitBistochastic),
                });
            }
        }
        VerifyFamily::UnitaryMixture => {
            for i in 0..opts.count {
                let s = sample::derive_seed(opts.seed, i as u64);
                let channel = make_random_unitary_mixture(opts.dim, opts.k, s, tol)?;
                let exact_c = if opts.dim == 2 {
                    Some(king_ruskai_form(&channel, tol)?.c_exact)
                } else {
                    None
                };
                members.push(Member {
                    channel,
                    exact_c,
                    sharp_class: None,
                });
            }
            if opts.dim > 2 {
                status.push(
                    "contraction rate not exact at this dimension; only the gap-form bound is asserted"
                        .into(),
                );
            }
        }
        VerifyFamily::QubitProduct => {
            for i in 0..opts.count {
                let base = sample::derive_seed(opts.seed, i as u64);
                let (a, ca) = strictly_contractive_qubit(sample::derive_seed(base, 1), opts.k, tol)?;
                let (b, cb) = strictly_contractive_qubit(sample::derive_seed(base, 2), opts.k, tol)?;
                let channel = a.tensor_product(&b);
                let c = ca.max(cb);
                // The max-factor rate feeds the product bounds; audit it
                // against sampled ratios before trusting it.
                let claimed = crate::contraction::ContractionEstimate {
                    c_lower: c,
                    method: ContractionMethod::PairOptimization,
                    restarts: 0,
                    best_pair: (
                        crate::mat::ComplexVector::zeros(4),
                        crate::mat::ComplexVector::zeros(4),
                    ),
                    converged: true,
                };
                let audit = sample_ratio_audit(&channel, &claimed, opts.trials, base, tol)?;
                if !audit.conclusive || audit.max_ratio > c + TOL_AUDIT {
                    inconclusive = true;
                    status.push(format!(
                        "product channel {i}: sampled ratio {} exceeds max factor rate {c}",
                        audit.max_ratio
                    ));
                }
                members.push(Member {
                    channel,
                    exact_c: Some(c),
                    sharp_class: Some(SharpClass::QubitProduct),
                });
            }
        }
    }

    if members.is_empty() {
        status.push("empty ensemble: trivially passing".into());
    }

    let channels_run = members.len();
    for (i, member) in members.iter().enumerate() {
        let ch = &member.channel;
        let gamma = match spectral_gap(ch, tol) {
            Ok(sp) => {
                if let Some(c) = member.exact_c {
                    gap_checked += 1;
                    let slack = sp.gap_gamma - (1.0 - c);
                    gap_worst = gap_worst.min(slack);
                    if slack < -tol.tol_eig {
                        gap_violations += 1;
                    }
                }
                Some(sp.gap_gamma)
            }
            Err(Error::NotErgodic { .. }) => None,
            Err(e) => return Err(e),
        };

        for j in 0..opts.states {
            let mut rng = sample::rng_from(sample::derive_seed(
                sample::derive_seed(opts.seed, i as u64),
                0x5EED + j as u64,
            ));
            let sigma = sample::random_density(ch.dim(), &mut rng);
            let mut results: Vec<BoundCheckResult> = Vec::new();
            if let Some(g) = gamma {
                results.push(check_streater_bound(ch, &sigma, g, tol)?);
            }
            if let Some(c) = member.exact_c.filter(|c| *c < 1.0) {
                results.push(check_main_bound(ch, &sigma, c, tol)?);
                if let Some(class) = member.sharp_class {
                    results.push(check_sharp_bound(ch, &sigma, c, class, tol)?);
                }
            }
            for check in results {
                checks_run += 1;
                let entry = worst
                    .entry(check.bound_id.as_str().to_string())
                    .or_insert(f64::INFINITY);
                *entry = entry.min(check.margin);
                if !check.satisfied {
                    violations += 1;
                    if violators.len() < MAX_VIOLATOR_DUMPS {
                        violators.push(ViolatorDump {
                            channel: channel_to_json(ch),
                            state: state_to_json(&sigma),
                            check,
                        });
                    }
                }
            }
        }
    }

    if violations > violators.len() {
        status.push(format!(
            "violator dumps capped at {MAX_VIOLATOR_DUMPS} of {violations}"
        ));
    }

    let gap_bound = if gap_checked > 0 {
        violations += gap_violations;
        Some(GapCheckSummary {
            checked: gap_checked,
            violations: gap_violations,
            worst_slack: gap_worst,
        })
    } else {
        None
    };

    let exit = if violations > 0 {
        EXIT_BOUND_VIOLATION
    } else if inconclusive {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    };

    let report = VerifyReport {
        family: opts.family.as_str().to_string(),
        dim: opts.dim,
        count: opts.count,
        states_per_channel: opts.states,
        seed: opts.seed,
        channels_run,
        checks_run,
        violations,
        worst_margin_by_bound: worst,
        gap_bound,
        violators,
        tool_version: TOOL_VERSION.to_string(),
        status,
    };
    Ok((report, exit))
}

/// Generates a channel file for a named family.
pub fn run_gen(spec: &ChannelSpec, tol: &Tolerances) -> Result<ChannelJson> {
    if matches!(spec, ChannelSpec::File(_)) {
        return Err(Error::InvalidParameter(
            "gen needs a --family, not a --channel file".into(),
        ));
    }
    let resolved = resolve_channel(spec, tol)?;
    Ok(channel_to_json(&resolved.channel))
}
