use std::fs;
use std::path::{Path, PathBuf};

use ambiform::assoc::{associate, TrackOutcome};
use ambiform::beamform::{
    beam_pattern, constraint_residuals, gains, identifiability, solve, BeamformResult, BeamformStatus,
};
use ambiform::gating::confusion_table;
use ambiform::graph::threshold_graph;
use ambiform::scene::{uniform_scene, PriorParams};
use ambiform::tradeoff::{concave_envelope, evaluate, exhaustive, pareto_indices, sweep_with_table, TradeoffOptions, TradeoffPoint};
use ambiform::waveform::sim::{detect, matched_filter_sim, FilterGrid, SimOptions};
use ambiform::waveform::verify::{verify_theorem1, AmbiguityReport, PairSelection, VerifyOptions};
use ambiform::waveform::{condbt_check, generate};
use ambiform::{AmbiguityGraph, GraphKind, Scene};
use serde_json::json;

use crate::config::ScenarioConfig;
use crate::failure::Failure;
use crate::svg::{Plot, Series, Style};

pub type Outcome = Result<(), Failure>;

pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn csv(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Outcome {
        let mut w = csv::Writer::from_path(self.path(name))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    fn json(&self, name: &str, value: &impl serde::Serialize) -> Outcome {
        let text = serde_json::to_string_pretty(value).map_err(Failure::io)?;
        fs::write(self.path(name), text + "\n")?;
        Ok(())
    }

    fn svg(&self, name: &str, plot: &Plot) -> Outcome {
        fs::write(self.path(name), plot.render())?;
        Ok(())
    }
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn edges_text(graph: &AmbiguityGraph) -> String {
    graph.edges().map(|(i, j)| format!("{i}-{j}")).collect::<Vec<_>>().join(";")
}

fn status_name(status: BeamformStatus) -> &'static str {
    match status {
        BeamformStatus::Optimal => "optimal",
        BeamformStatus::Infeasible => "infeasible",
        BeamformStatus::NumericalFailure => "numerical_failure",
    }
}

fn require_optimal(result: &BeamformResult<f64>) -> Outcome {
    match result.status {
        BeamformStatus::Optimal => Ok(()),
        BeamformStatus::Infeasible => Err(Failure::infeasible(
            "no beamforming matrix with positive gain satisfies the zero-forcing constraints",
        )),
        BeamformStatus::NumericalFailure => Err(Failure::solver(format!(
            "interior-point solve did not certify optimality (KKT residual {:?})",
            result.kkt_residual
        ))),
    }
}

struct Prepared {
    config: ScenarioConfig,
    scene: Scene,
    graph: AmbiguityGraph,
}

fn prepare(config: &Path, gamma: Option<f64>, out: &Output) -> Result<Prepared, Failure> {
    let config = ScenarioConfig::load(config)?;
    let scene = config.scene()?;
    let graph = config.graph(&scene, gamma)?;
    out.json("scenario.json", &config.canonical(&graph))?;
    Ok(Prepared { config, scene, graph })
}

pub fn beamform(config: &Path, gamma: Option<f64>, delta: Option<f64>, out: &Output) -> Outcome {
    let p = prepare(config, gamma, out)?;
    let options = p.config.beamform_options(delta)?;
    let result = solve(&p.scene, &p.graph, &options)?;
    let r = &result.matrix.entries;
    let res = constraint_residuals(r, &p.scene, &p.graph);
    let matrix = |f: fn(&num_complex::Complex<f64>) -> f64| -> Vec<Vec<f64>> {
        (0..r.nrows()).map(|i| (0..r.ncols()).map(|j| f(&r[(i, j)])).collect()).collect()
    };
    let report = json!({
        "status": status_name(result.status),
        "graph_edges": edges_text(&p.graph),
        "delta": options.interference_bound,
        "P_linear": result.objective,
        "P_db": db(result.objective),
        "iterations": result.iterations,
        "kkt_residual": result.kkt_residual,
        "gains": gains(r, &p.scene),
        "residuals": {
            "trace_error": res.trace_error,
            "hermitian_error": res.hermitian_error,
            "min_eigenvalue": res.min_eigenvalue,
            "max_cross_term": res.max_cross_term,
            "within_tolerance": res.within(options.interference_bound),
        },
        "R_re": matrix(|z| z.re),
        "R_im": matrix(|z| z.im),
    });
    out.json("beamform.json", &report)?;
    println!(
        "status {}  P = {:.6} ({:.3} dB)  iterations {}",
        status_name(result.status),
        result.objective,
        db(result.objective),
        result.iterations
    );
    require_optimal(&result)
}

pub fn pattern(config: &Path, gamma: Option<f64>, delta: Option<f64>, out: &Output) -> Outcome {
    let p = prepare(config, gamma, out)?;
    let options = p.config.beamform_options(delta)?;
    let result = solve(&p.scene, &p.graph, &options)?;
    require_optimal(&result)?;
    let degrees: Vec<f64> = (-90..=90).map(f64::from).collect();
    let radians: Vec<f64> = degrees.iter().map(|d| d.to_radians()).collect();
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for k in 0..p.scene.n_targets() {
        let values = beam_pattern(&result.matrix.entries, &p.scene, k, &radians)?;
        rows.extend(
            degrees
                .iter()
                .zip(&values)
                .map(|(d, v)| vec![d.to_string(), k.to_string(), v.to_string()]),
        );
        series.push(Series {
            label: format!("target {k}"),
            points: degrees.iter().copied().zip(values).collect(),
            style: Style::Line,
        });
    }
    out.csv("pattern.csv", &["theta_deg", "target_index", "magnitude"], rows)?;
    out.svg(
        "pattern.svg",
        &Plot {
            title: "Transmit beam pattern",
            x_label: "azimuth (deg)",
            y_label: "|a_k^H R a(theta)|",
            series,
        },
    )?;
    println!("P = {:.3} dB, pattern over 181 azimuths", db(result.objective));
    Ok(())
}

pub fn powergain(n_min: usize, n_max: usize, out: &Output) -> Outcome {
    if n_min == 0 || n_min > n_max {
        return Err(Failure::config("need 1 <= n-min <= n-max"));
    }
    let options = Default::default();
    let mut rows = Vec::new();
    let mut ratio = Vec::new();
    for n in n_min..=n_max {
        let scene: Scene = uniform_scene(n, n, &PriorParams::default())?;
        let complete = solve(&scene, &AmbiguityGraph::complete(n), &options)?;
        let path = solve(&scene, &AmbiguityGraph::path(n), &options)?;
        require_optimal(&complete)?;
        require_optimal(&path)?;
        let r = db(path.objective) - db(complete.objective);
        println!("N = {n}: complete {:.3} dB, path {:.3} dB, ratio {r:.3} dB", db(complete.objective), db(path.objective));
        rows.push(vec![
            n.to_string(),
            complete.objective.to_string(),
            db(complete.objective).to_string(),
            path.objective.to_string(),
            db(path.objective).to_string(),
            r.to_string(),
        ]);
        ratio.push((n as f64, r));
    }
    out.csv(
        "powergain.csv",
        &["N", "P_complete", "P_complete_db", "P_path", "P_path_db", "ratio_db"],
        rows,
    )?;
    out.svg(
        "powergain.svg",
        &Plot {
            title: "Power gain of path over complete graph (K = N)",
            x_label: "N",
            y_label: "ratio (dB)",
            series: vec![Series {
                label: "path / complete".into(),
                points: ratio,
                style: Style::Line,
            }],
        },
    )
}

pub fn identifiability_table(families: &[GraphKind], n_min: usize, n_max: usize, out: &Output) -> Outcome {
    if n_min == 0 || n_min > n_max {
        return Err(Failure::config("need 1 <= n-min <= n-max"));
    }
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for &family in families {
        let name = match family {
            GraphKind::Complete => "complete",
            GraphKind::Path => "path",
            GraphKind::Empty => "empty",
        };
        let k_max = |n: usize| if family == GraphKind::Path { 2 * n } else { n + 1 };
        let mut points = Vec::new();
        for n in n_min..=n_max {
            let report = identifiability::<f64>(n, family, k_max(n))?;
            println!("{name} N = {n}: K* = {}", report.k_star);
            rows.push(vec![n.to_string(), name.to_string(), report.k_star.to_string()]);
            points.push((n as f64, report.k_star as f64));
        }
        series.push(Series {
            label: name.to_string(),
            points,
            style: Style::Line,
        });
    }
    out.csv("identifiability.csv", &["N", "family", "K_star"], rows)?;
    out.svg(
        "identifiability.svg",
        &Plot {
            title: "Number of identifiable targets",
            x_label: "N",
            y_label: "K*",
            series,
        },
    )
}

pub struct TradeoffArgs {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub exhaustive: bool,
    pub long_run: bool,
}

fn power_field(point: &TradeoffPoint<f64>, value: f64) -> String {
    if point.feasible() {
        value.to_string()
    } else {
        status_name(point.status).to_string()
    }
}

pub fn tradeoff(config: &Path, args: &TradeoffArgs, out: &Output) -> Outcome {
    let config = ScenarioConfig::load(config)?;
    let scene = config.scene()?;
    let samples = args.samples.unwrap_or(config.simulation.samples);
    let seed = args.seed.unwrap_or(config.simulation.seed);
    let options = TradeoffOptions {
        n_samples: samples,
        seed,
        confusion: config.confusion_method(samples, seed),
        beamform: config.beamform_options(args.delta)?,
    };
    let table = confusion_table(&scene, options.confusion)?;
    let mut points = match args.gamma {
        Some(g) => vec![evaluate(&scene, threshold_graph(&table, g), Some(g), &options)?],
        None => sweep_with_table(&scene, &table, &options)?,
    };
    if args.exhaustive {
        points.extend(exhaustive(&scene, &options, args.long_run)?);
    }
    let pareto = pareto_indices(&points);
    let rows = points.iter().enumerate().map(|(i, p)| {
        vec![
            p.gamma.map(|g| g.to_string()).unwrap_or_default(),
            edges_text(&p.graph),
            power_field(p, p.power_gain),
            power_field(p, db(p.power_gain)),
            p.assoc_prob.to_string(),
            p.assoc_stderr.to_string(),
            u8::from(pareto.contains(&i)).to_string(),
        ]
    });
    out.csv(
        "tradeoff.csv",
        &["gamma", "graph_edges", "P_linear", "P_db", "C", "C_stderr", "pareto_flag"],
        rows,
    )?;
    let envelope = concave_envelope(&points);
    out.csv(
        "tradeoff_envelope.csv",
        &["P_linear", "C"],
        envelope.iter().map(|(p, c)| vec![p.to_string(), c.to_string()]),
    )?;
    let swept: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.gamma.is_some() && p.feasible())
        .map(|p| (p.power_gain, p.assoc_prob))
        .collect();
    let cloud: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.gamma.is_none() && p.feasible())
        .map(|p| (p.power_gain, p.assoc_prob))
        .collect();
    out.svg(
        "tradeoff.svg",
        &Plot {
            title: "Detection-association trade-off",
            x_label: "P(G)",
            y_label: "C(G)",
            series: vec![
                Series {
                    label: "all graphs".into(),
                    points: cloud,
                    style: Style::Markers,
                },
                Series {
                    label: "threshold sweep".into(),
                    points: swept,
                    style: Style::Markers,
                },
                Series {
                    label: "concave envelope".into(),
                    points: envelope,
                    style: Style::Line,
                },
            ],
        },
    )?;
    println!("{} points, {} Pareto optimal", points.len(), pareto.len());
    Ok(())
}

pub struct WaveformArgs {
    pub n: usize,
    pub bandwidth: f64,
    pub duration: f64,
    pub seed: u64,
    pub seeds: usize,
    pub delta: f64,
    pub tau_subsample: usize,
    pub omega_subsample: usize,
}

pub fn waveform(args: &WaveformArgs, out: &Output) -> Outcome {
    if args.seeds == 0 {
        return Err(Failure::config("--seeds must be at least 1"));
    }
    let options = VerifyOptions {
        tau_subsample: args.tau_subsample,
        omega_subsample: args.omega_subsample,
        pairs: PairSelection::All,
        ..VerifyOptions::default()
    };
    let flag = |b: Option<bool>| b.map(|b| u8::from(b).to_string()).unwrap_or_default();
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    let mut rows = Vec::new();
    let mut passed = 0;
    for seed in args.seed..args.seed + args.seeds as u64 {
        let set = generate::<f64>(args.n, args.bandwidth, args.duration, seed)?;
        let r = verify_theorem1(&set, args.delta, &options)?;
        passed += usize::from(r.passes());
        println!(
            "seed {seed}: cross max {} dB, auto sidelobe max {} dB, pass {}",
            r.cross_max.map_or("-".into(), |v| format!("{:.2}", AmbiguityReport::amplitude_db(v))),
            r.auto_sidelobe_max
                .map_or("-".into(), |v| format!("{:.2}", AmbiguityReport::amplitude_db(v))),
            r.passes()
        );
        rows.push(vec![
            seed.to_string(),
            r.origin_error.to_string(),
            opt(r.auto_sidelobe_max),
            opt(r.cross_max),
            opt(r.cross_max.map(AmbiguityReport::amplitude_db)),
            u8::from(r.property1).to_string(),
            flag(r.property2),
            flag(r.property3),
            u8::from(r.passes()).to_string(),
        ]);
    }
    out.csv(
        "waveform.csv",
        &[
            "seed",
            "origin_error",
            "auto_sidelobe_max",
            "cross_max",
            "cross_max_db",
            "property1",
            "property2",
            "property3",
            "pass",
        ],
        rows,
    )?;
    let condbt = condbt_check(args.delta, args.bandwidth, args.duration, args.n);
    out.json(
        "waveform.json",
        &json!({
            "n_waveforms": args.n,
            "bandwidth": args.bandwidth,
            "duration": args.duration,
            "delta": args.delta,
            "tau_subsample": args.tau_subsample,
            "omega_subsample": args.omega_subsample,
            "seeds": args.seeds,
            "seeds_passing": passed,
            "condbt_check": condbt,
        }),
    )?;
    println!("{passed}/{} seeds pass; sufficient condition on BT holds: {condbt}", args.seeds);
    Ok(())
}

const MAX_FILTER_CELLS: usize = 4_000_000;

pub fn simulate(config: &Path, gamma: Option<f64>, delta: Option<f64>, seed: Option<u64>, out: &Output) -> Outcome {
    let p = prepare(config, gamma, out)?;
    let sim = &p.config.simulation;
    let options = p.config.beamform_options(delta)?;
    let result = solve(&p.scene, &p.graph, &options)?;
    require_optimal(&result)?;

    let truth: Vec<(f64, f64)> = match &sim.truth {
        Some(t) if t.len() != p.scene.n_targets() => {
            return Err(Failure::config("simulation.truth needs one (tau, omega) pair per target"))
        }
        Some(t) => t.clone(),
        None => p.scene.targets().iter().map(|t| t.mean()).collect(),
    };
    let seed = seed.unwrap_or(sim.seed);
    let waveforms = generate::<f64>(p.scene.n_antennas(), sim.bandwidth, sim.duration, seed)?;

    let (dtau, domega) = (1.0 / sim.bandwidth, 1.0 / sim.duration);
    let span = |values: &mut dyn Iterator<Item = f64>, step: f64| {
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let first = (lo / step).round() - 2.0;
        let count = ((hi / step).round() - first) as usize + 3;
        (first * step, count)
    };
    let (tau0, n_tau) = span(&mut truth.iter().map(|t| t.0), dtau);
    let (omega0, n_omega) = span(&mut truth.iter().map(|t| t.1), domega);
    if n_tau.saturating_mul(n_omega) > MAX_FILTER_CELLS {
        return Err(Failure::config(format!(
            "filter lattice of {n_tau} x {n_omega} cells exceeds {MAX_FILTER_CELLS}"
        )));
    }
    let grid = FilterGrid::lattice(tau0, dtau, n_tau, omega0, domega, n_omega)?;
    let sim_options = SimOptions {
        noise_std: sim.noise_std,
        seed,
        ideal: sim.ideal,
    };
    let outputs = matched_filter_sim(&p.scene, &result.matrix.entries, &waveforms, &truth, &grid, &sim_options)?;
    let threshold = sim.detection_threshold();
    let detections = detect(&outputs, threshold);
    let outcome = associate(&detections, &p.scene, &p.graph, threshold)?;

    let rows = outcome.tracks.iter().enumerate().map(|(k, track)| {
        let (name, det, candidates) = match track {
            TrackOutcome::Assigned(i) => ("assigned", Some(&detections[*i]), 1),
            TrackOutcome::ErrorNone => ("error_none", None, 0),
            TrackOutcome::ErrorMultiple(c) => ("error_multiple", None, c.len()),
        };
        let field = |f: fn(&ambiform::assoc::Detection<f64>) -> f64| det.map(|d| f(d).to_string()).unwrap_or_default();
        vec![
            k.to_string(),
            name.to_string(),
            field(|d| d.tau),
            field(|d| d.omega),
            field(|d| d.magnitude),
            candidates.to_string(),
        ]
    });
    out.csv(
        "simulate.csv",
        &["target_index", "outcome", "tau", "omega", "magnitude", "n_candidates"],
        rows,
    )?;
    println!(
        "{} detections, {}/{} tracks assigned",
        detections.len(),
        outcome.tracks.len() - outcome.n_errors(),
        outcome.tracks.len()
    );
    Ok(())
}
