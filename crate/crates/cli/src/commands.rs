use std::fs::File;
use std::io::{BufWriter, Write};

use anyhow::{anyhow, Context, Result};
use fvps::entangled::{correlation_energy, pair_energy, penalty_curve, Kinematics, PairState, Statistics};
use fvps::fv::build_hamiltonian;
use fvps::moyal::{evolve_even, evolve_timestep_reference};
use fvps::rotator::{
    damping_fit, first_moment_deviation, modulation_spectrum, orbit_series, translational_coupling, RotatorModel,
    Spectrum,
};
use fvps::states::{
    free_coherent_state, gaussian_state, rotator_coherent_state, Branch, ChargeBranchState, CoherentSpec, GaussianSpec,
};
use fvps::wigner::{moments, EpsilonModel, WignerField, WignerTransform};
use fvps::{EnergyModel, MomentumGrid, PhaseSpaceGrid, UnitSystem};
use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::output::{emit, meta, provenance};
use crate::{
    CoherentArgs, CoherentKind, EntangleArgs, Eps, EvolveArgs, FactorsArgs, Layout, PacketArgs, Preset, RotatorArgs,
    SpectrumArg, UnitArgs, WignerArgs,
};

pub enum Outcome {
    Done,
    ToleranceMissed(String),
}

/// Invalid input maps to 2, everything else to 1.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<fvps::Error>()) {
        Some(fvps::Error::Numerical(_) | fvps::Error::Io(_)) => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(fvps::Error::Configuration(msg.into()))
}

fn units(u: &UnitArgs) -> Result<UnitSystem> {
    Ok(UnitSystem::new(u.mass, u.c, u.hbar)?)
}

fn clean(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

pub fn factors(a: &FactorsArgs, u: &UnitArgs) -> Result<Outcome> {
    let units = units(u)?;
    if !(a.p1.is_finite() && a.p2.is_finite()) {
        return Err(invalid("momenta must be finite"));
    }
    let m = EnergyModel::free(units);
    println!("eps = {:.12}", clean(m.eps_factor(a.p1, a.p2)));
    println!("chi = {:.12}", clean(m.chi_factor(a.p1, a.p2)));
    println!("rhs = {:.12}", clean(m.purity_rhs(a.p1, a.p2)));
    Ok(Outcome::Done)
}

struct Packet {
    lambda: f64,
    spec: GaussianSpec,
    state: ChargeBranchState,
    transform: WignerTransform,
    eps: EpsilonModel,
}

fn packet(p: &PacketArgs, preset: Option<Preset>, default_lambda: f64, units: &UnitSystem) -> Result<Packet> {
    let sigma = match (p.sigma, p.lambda) {
        (Some(s), _) => s,
        (None, Some(l)) => units.width_for_localization(l)?,
        (None, None) => units.width_for_localization(match preset {
            Some(Preset::Fig1) => 8.0,
            None => default_lambda,
        })?,
    };
    let preset_grid = match preset {
        Some(Preset::Fig1) => Some((512, 64.0)),
        None => None,
    };
    let grid = match (p.n, p.p_max, preset_grid) {
        (Some(n), Some(pm), _) => MomentumGrid::new(n, pm)?,
        (None, None, Some((n, pm))) => MomentumGrid::new(n, pm)?,
        (None, None, None) => MomentumGrid::for_packet(sigma, p.p_bar, units)?,
        (Some(n), None, Some((_, pm))) => MomentumGrid::new(n, pm)?,
        (None, Some(pm), Some((n, _))) => MomentumGrid::new(n, pm)?,
        _ => return Err(invalid("--n and --p-max must be given together")),
    };
    let phase = match p.q_max {
        Some(q) => {
            let g = PhaseSpaceGrid::new(grid, grid.len(), q)?;
            g.require_conjugate(units.hbar)?;
            g
        }
        None => PhaseSpaceGrid::conjugate(grid, units.hbar),
    };
    let spec = GaussianSpec { sigma, p_bar: p.p_bar, q_bar: p.q_bar, branch: Branch::Positive };
    let state = gaussian_state(&spec, &grid, units)?;
    let transform = WignerTransform::new(phase, *units)?;
    let eps = match p.epsilon {
        Eps::Rel => EpsilonModel::Relativistic,
        Eps::Unity => EpsilonModel::Unity,
    };
    Ok(Packet { lambda: spec.localization(units), spec, state, transform, eps })
}

fn packet_meta(p: &Packet, units: &UnitSystem) -> Vec<(&'static str, String)> {
    let g = p.transform.grid();
    meta(&[
        ("lambda", format!("{}", p.lambda)),
        ("sigma", format!("{}", p.spec.sigma)),
        ("p_bar", format!("{}", p.spec.p_bar)),
        ("q_bar", format!("{}", p.spec.q_bar)),
        ("n", g.n_p().to_string()),
        ("p_max", format!("{}", g.momentum().p_max())),
        ("q_max", format!("{}", g.q_max())),
        ("hbar", format!("{}", units.hbar)),
        (
            "epsilon",
            match p.eps {
                EpsilonModel::Relativistic => "rel".into(),
                EpsilonModel::Unity => "unity".into(),
            },
        ),
    ])
}

fn write_field(w: &mut dyn Write, field: &WignerField, layout: Layout, meta: &[(&str, String)]) -> Result<()> {
    match layout {
        Layout::Long => field.write_csv(w, meta)?,
        Layout::Matrix => field.write_matrix_csv(w, meta)?,
    }
    Ok(())
}

fn grid_json(g: &PhaseSpaceGrid) -> Value {
    json!({ "n": g.n_p(), "p_max": g.momentum().p_max(), "q_max": g.q_max() })
}

pub fn wigner(a: &WignerArgs, u: &UnitArgs) -> Result<Outcome> {
    let units = units(u)?;
    let p = packet(&a.packet, a.preset, 1.0, &units)?;
    let w = p.transform.even(&p.state, Branch::Positive, p.eps)?;
    let m = moments(&w);
    if m.var_q_negative {
        eprintln!("warning: position variance is negative ({:.6e})", m.var_q);
    }
    let results = json!({
        "lambda": p.lambda,
        "sigma": p.spec.sigma,
        "grid": grid_json(p.transform.grid()),
        "integral": w.integral(),
        "moments": m,
    });
    let report = provenance("wigner", a, u, json!({ "to_real_imaginary": 1e-10 }), results);
    let header = packet_meta(&p, &units);
    emit(a.out.as_deref(), &report, |out| write_field(out, &w, a.layout, &header))?;
    Ok(Outcome::Done)
}

pub fn evolve(a: &EvolveArgs, u: &UnitArgs) -> Result<Outcome> {
    let units = units(u)?;
    if !a.t.is_finite() {
        return Err(invalid("--t must be finite"));
    }
    if !(a.tol > 0.0) {
        return Err(invalid("--tol must be positive"));
    }
    if a.steps == Some(0) {
        return Err(invalid("--steps must be at least 1"));
    }
    let p = packet(&a.packet, None, 2.0, &units)?;
    let energy = |q: f64| units.energy(q);
    let w0 = p.transform.even(&p.state, Branch::Positive, p.eps)?;
    let w = evolve_even(&w0, energy, a.t, units.hbar)?;

    let deviation = if a.check {
        let direct = p.transform.even(&p.state.evolved(a.t), Branch::Positive, p.eps)?;
        let d = w.max_abs_diff(&direct)?;
        eprintln!("max |spectral − wavefunction| = {d:.3e} (tolerance {:.1e})", a.tol);
        Some(d)
    } else {
        None
    };
    let reference = match a.steps {
        Some(n) => {
            let r = evolve_timestep_reference(&w0, energy, a.t, n, units.hbar)?;
            let d = r.max_abs_diff(&w)?;
            eprintln!("max |reference({n} steps) − spectral| = {d:.3e}");
            Some(d)
        }
        None => None,
    };
    let passed = deviation.map(|d| d < a.tol);
    let results = json!({
        "lambda": p.lambda,
        "grid": grid_json(p.transform.grid()),
        "t": a.t,
        "check_deviation": deviation,
        "check_passed": passed,
        "reference_deviation": reference,
        "integral_drift": w.integral() - w0.integral(),
        "moments_initial": moments(&w0),
        "moments_final": moments(&w),
    });
    let report = provenance("evolve", a, u, json!({ "check": a.tol }), results);
    let mut header = packet_meta(&p, &units);
    header.push(("t", format!("{}", a.t)));
    emit(a.out.as_deref(), &report, |out| write_field(out, &w, a.layout, &header))?;
    match (passed, deviation) {
        (Some(false), Some(d)) => Ok(Outcome::ToleranceMissed(format!("deviation {d:.3e} >= {:.1e}", a.tol))),
        _ => Ok(Outcome::Done),
    }
}

pub fn coherent(a: &CoherentArgs, u: &UnitArgs) -> Result<Outcome> {
    let units = units(u)?;
    let alpha = C::new(a.alpha, a.alpha_im);
    match a.kind {
        CoherentKind::Free => {
            let sigma = a.sigma.unwrap_or_else(|| units.compton_length());
            let spec = CoherentSpec { alpha, sigma, branch: Branch::Positive };
            let (q_bar, p_bar) = spec.center(units.hbar);
            let grid = match (a.n, a.p_max) {
                (Some(n), Some(pm)) => MomentumGrid::new(n, pm)?,
                (None, None) => MomentumGrid::for_packet(sigma, p_bar, &units)?,
                _ => return Err(invalid("--n and --p-max must be given together")),
            };
            let s = free_coherent_state(&spec, &grid, &units)?;
            let results = json!({
                "center": { "q": q_bar, "p": p_bar },
                "charge_norm": s.charge_norm(),
                "position_mean": s.position_mean(Branch::Positive)?,
                "momentum_mean": s.momentum_mean(Branch::Positive, |p| p)?,
                "grid": { "n": grid.len(), "p_max": grid.p_max() },
            });
            let report = provenance("coherent", a, u, json!({}), results);
            let header = meta(&[
                ("kind", "free".into()),
                ("alpha_re", format!("{}", a.alpha)),
                ("alpha_im", format!("{}", a.alpha_im)),
                ("sigma", format!("{sigma}")),
            ]);
            emit(a.out.as_deref(), &report, |out| Ok(s.write_csv(out, Branch::Positive, &header)?))?;
        }
        CoherentKind::Rotator => {
            let model = EnergyModel::landau(units, a.b)?;
            let s = rotator_coherent_state(alpha, &model, a.n_max)?;
            let c = s.coefficients();
            let mean_n: f64 = c.iter().enumerate().map(|(n, z)| n as f64 * z.norm_sqr()).sum();
            let results = json!({
                "tail": s.tail(),
                "mean_n": mean_n,
                "first_moment_deviation": first_moment_deviation(&s, alpha),
            });
            let report = provenance("coherent", a, u, json!({ "tail": 1e-12 }), results);
            let header = meta(&[
                ("kind", "rotator".into()),
                ("alpha_re", format!("{}", a.alpha)),
                ("alpha_im", format!("{}", a.alpha_im)),
                ("b", format!("{}", a.b)),
            ]);
            emit(a.out.as_deref(), &report, |out| {
                for (k, v) in &header {
                    writeln!(out, "# {k}={v}")?;
                }
                writeln!(out, "n,re,im,prob")?;
                for (n, z) in c.iter().enumerate() {
                    writeln!(out, "{n},{:.17e},{:.17e},{:.17e}", z.re, z.im, z.norm_sqr())?;
                }
                Ok(())
            })?;
        }
    }
    Ok(Outcome::Done)
}

pub fn rotator(a: &RotatorArgs, u: &UnitArgs) -> Result<Outcome> {
    let units = units(u)?;
    let model = RotatorModel::new(units, a.b, a.n_max + 1)?;
    let alpha = C::new(a.alpha, a.alpha_im);
    let spectrum = match a.spectrum {
        SpectrumArg::Rel => Spectrum::Relativistic,
        SpectrumArg::Equal => Spectrum::EquallySpaced,
    };
    if let Some(k) = a.coupling_nodes {
        // Fail on an oversized joint basis before the long run starts.
        if model.levels() * k > fvps::rotator::MAX_JOINT_DIM {
            return Err(invalid(format!(
                "coupling basis {} x {k} exceeds {}",
                model.levels(),
                fvps::rotator::MAX_JOINT_DIM
            )));
        }
    }
    let state = rotator_coherent_state(alpha, model.energy_model(), a.n_max)?;
    let series = orbit_series(&state, &model, spectrum, a.t_max, a.dt)?;
    let spec = modulation_spectrum(&series.r, series.dt)?;
    if let Some(w) = &spec.warning {
        eprintln!("warning: {w}");
    }
    let damping = damping_fit(&series);
    let coupling = match a.coupling_nodes {
        Some(k) => {
            let pz = MomentumGrid::new(k, 4.0 * units.momentum_scale())?;
            Some(translational_coupling(&model, &pz)?)
        }
        None => None,
    };
    if let Some(path) = &a.dump_hamiltonian {
        let h = build_hamiltonian(model.energy_model(), &model.basis())?;
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(f);
        h.write_binary(&mut w)?;
        w.flush()?;
    }
    let omega = series.omega;
    let ratio = |p: Option<fvps::rotator::Peak>| p.map(|p| p.frequency / omega);
    let results = json!({
        "omega": omega,
        "samples": series.times.len(),
        "modulation_depth": series.modulation_depth(),
        "peaks": spec.peaks,
        "resolution": spec.resolution,
        "dominant": spec.dominant(),
        "lowest": spec.lowest(),
        "dominant_over_omega": ratio(spec.dominant()),
        "lowest_over_omega": ratio(spec.lowest()),
        "warning": spec.warning,
        "damping": damping.as_ref().ok(),
        "damping_error": damping.as_ref().err().map(|e| e.to_string()),
        "first_moment_deviation": first_moment_deviation(&state, alpha),
        "coupling": coupling,
        "hamiltonian_dump": a.dump_hamiltonian.as_ref().map(|p| json!({
            "path": p,
            "dimension": 2 * model.levels(),
            "format": "row-major complex128, little-endian (re, im) pairs, no header",
        })),
    });
    let tolerances = json!({ "peak_fraction": 0.05, "samples_per_period": 8, "state_tail": 1e-12 });
    let report = provenance("rotator", a, u, tolerances, results);
    let header = meta(&[
        ("b", format!("{}", a.b)),
        ("alpha_re", format!("{}", a.alpha)),
        ("alpha_im", format!("{}", a.alpha_im)),
        ("omega", format!("{omega}")),
        ("dt", format!("{}", a.dt)),
        (
            "spectrum",
            match a.spectrum {
                SpectrumArg::Rel => "rel".into(),
                SpectrumArg::Equal => "equal".into(),
            },
        ),
    ]);
    emit(a.out.as_deref(), &report, |out| Ok(series.write_csv(out, &header)?))?;
    Ok(Outcome::Done)
}

fn float_list(s: &str, name: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("--{name}: cannot parse {t:?} as a number")))
        })
        .collect()
}

fn kinds(s: &str) -> Result<Vec<Kinematics>> {
    s.split(',')
        .map(|t| match t.trim() {
            "nonrel" => Ok(Kinematics::NonRelativistic),
            "rel" => Ok(Kinematics::Relativistic),
            other => Err(invalid(format!("--models: unknown model {other:?} (use nonrel, rel)"))),
        })
        .collect()
}

pub fn entangle(a: &EntangleArgs, u: &UnitArgs) -> Result<Outcome> {
    let units = units(u)?;
    let sigmas = float_list(&a.sigma, "sigma")?;
    let models = kinds(&a.models)?;
    let separations = match &a.separation {
        Some(s) => float_list(s, "separation")?,
        None => Vec::new(),
    };
    let curve = penalty_curve(&sigmas, &models, &units)?;
    let pair_sigma = sigmas[0];
    let pairs: Vec<Value> = separations
        .par_iter()
        .map(|&d| -> Result<Value> {
            let mut row = serde_json::Map::new();
            row.insert("separation".into(), json!(d));
            for &k in &models {
                for (st, name) in [(Statistics::Bose, "bose"), (Statistics::Fermi, "fermi")] {
                    let pair = PairState::new(pair_sigma, d, st, units)?;
                    row.insert(
                        format!("{name}_{}", k.label()),
                        json!({
                            "energy": pair_energy(&pair, k)?,
                            "correlation": correlation_energy(&pair, k)?,
                        }),
                    );
                }
            }
            Ok(Value::Object(row))
        })
        .collect::<Result<_>>()?;
    let columns: serde_json::Map<String, Value> = models
        .iter()
        .map(|&k| (k.label().to_string(), json!(curve.column(k))))
        .collect();
    let ratio = match (curve.column(Kinematics::Relativistic), curve.column(Kinematics::NonRelativistic)) {
        (Some(r), Some(n)) => Some(r.iter().zip(&n).map(|(a, b)| a / b).collect::<Vec<f64>>()),
        _ => None,
    };
    let results = json!({
        "sigmas": sigmas,
        "penalty": columns,
        "rel_over_nonrel": ratio,
        "pair_sigma": pair_sigma,
        "pairs": pairs,
    });
    let tolerances = json!({
        "quadrature_nodes": fvps::entangled::QUADRATURE_NODES,
        "quadrature_width": fvps::entangled::QUADRATURE_WIDTH,
    });
    let report = provenance("entangle", a, u, tolerances, results);
    let header = meta(&[("models", a.models.clone())]);
    emit(a.out.as_deref(), &report, |out| Ok(curve.write_csv(out, &header)?))?;
    Ok(Outcome::Done)
}
