use std::path::{Path, PathBuf};

use kapitza_core::dynamics::{run_pump, AmplitudeField};
use kapitza_core::exec;
use kapitza_core::measurement::{
    classify, realize_set, AtomState, ClassifierContext, ClassifierVerdict, ExperimentProtocol, Hypothesis,
    ScenarioModel, Stages,
};
use kapitza_core::momentum::{distribution_stats, fourier_coefficients, probabilities, Level, MomentumDistribution};
use kapitza_core::params::{PumpMode, SpecBundle};
use kapitza_core::spectroscopy::{
    find_resonances, scan_spectrum, AbsorptionSpectrum, Formula, ResonanceSet, SpectrumMetadata, SpectrumSource,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cli::{Cli, Command, FormulaChoice, ProtocolChoice};
use crate::config::{Config, Format};
use crate::error::{CliError, Result};
use crate::manifest::{sha256_hex, Artifacts, RunManifest};
use crate::records::{distribution_text, extension, level_name, pretty, spectrum_csv, spectrum_text};
use crate::svg::{impulses, lines, Series};

/// What a finished command leaves behind.
#[derive(Debug)]
pub struct Report {
    pub out: PathBuf,
    pub manifest: RunManifest,
    pub summary: Vec<String>,
}

struct Run {
    config: Config,
    artifacts: Artifacts,
    summary: Vec<String>,
}

impl Run {
    fn format(&self) -> Format {
        self.config.output.format
    }

    fn svg(&self) -> bool {
        self.config.output.svg
    }
}

pub fn run(cli: Cli, args: Vec<String>) -> Result<Report> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        config.protocol.seed = seed;
    }
    if let Some(format) = cli.format {
        config.output.format = format;
    }
    config.output.svg |= cli.svg;

    // Command-specific overrides go into the snapshot as well.
    match &cli.command {
        Command::Spectrum { level: Some(level), .. } => config.probe.level = (*level).into(),
        Command::Scenario {
            protocol, realizations, ..
        } => {
            if let Some(p) = protocol {
                config.protocol.stages = (*p).into();
            }
            if let Some(n) = realizations {
                config.protocol.n_realizations = *n;
            }
        }
        _ => {}
    }

    let mut run = Run {
        artifacts: Artifacts::create(&cli.out)?,
        config,
        summary: Vec::new(),
    };
    match cli.command {
        Command::Pump => cmd_pump(&mut run)?,
        Command::Spectrum { formula, .. } => cmd_spectrum(&mut run, formula)?,
        Command::Scenario {
            hypotheses, spectra, ..
        } => cmd_scenario(&mut run, &hypotheses, spectra)?,
        Command::Classify { input, protocol } => cmd_classify(&mut run, &input, protocol)?,
        Command::Sweep { param, values } => cmd_sweep(&mut run, &param, &values)?,
    }
    let snapshot = serde_json::to_value(&run.config)?;
    let manifest = run.artifacts.finish(args, run.config.protocol.seed, snapshot)?;
    Ok(Report {
        out: cli.out,
        manifest,
        summary: run.summary,
    })
}

fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}/{name}")
    }
}

struct PumpOutcome {
    spectrum: kapitza_core::momentum::MomentumSpectrum,
    dist: MomentumDistribution,
    row: PumpRow,
}

#[derive(Clone, Debug, Serialize)]
struct PumpRow {
    norm: f64,
    populated_count: usize,
    level_totals: [f64; 3],
    mean_m: [f64; 3],
    ground_mean_m: f64,
    asymmetry: f64,
    standing_asymmetry: Option<f64>,
}

fn ground_mean(d: &MomentumDistribution) -> f64 {
    let g = d.level_total(Level::G1) + d.level_total(Level::G2);
    if g == 0.0 {
        return 0.0;
    }
    d.m_values()
        .map(|m| m as f64 * (d.weight(Level::G1, m) + d.weight(Level::G2, m)))
        .sum::<f64>()
        / g
}

fn pump_stage(bundle: &SpecBundle) -> Result<PumpOutcome> {
    let initial = AmplitudeField::ground_equal(bundle.grid.n_eta);
    let stages = run_pump(&initial, &bundle.pump)?;
    let final_state = stages.final_state();
    let spectrum = fourier_coefficients(final_state, bundle.grid.m_max)?;
    let dist = probabilities(&spectrum);
    let stats = distribution_stats(&dist)?;
    let standing_asymmetry = match &stages.after_traveling {
        Some(_) => {
            let d = probabilities(&fourier_coefficients(&stages.after_standing, bundle.grid.m_max)?);
            Some(distribution_stats(&d)?.asymmetry)
        }
        None => None,
    };
    let row = PumpRow {
        norm: final_state.norm(),
        populated_count: dist.populated_count(),
        level_totals: Level::ALL.map(|l| dist.level_total(l)),
        mean_m: stats.mean_m,
        ground_mean_m: ground_mean(&dist),
        asymmetry: stats.asymmetry,
        standing_asymmetry,
    };
    Ok(PumpOutcome { spectrum, dist, row })
}

fn write_pump(run: &mut Run, prefix: &str, bundle: &SpecBundle) -> Result<PumpOutcome> {
    let outcome = pump_stage(bundle)?;
    let fmt = run.format();
    let name = join(prefix, &format!("distribution.{}", extension(fmt)));
    run.artifacts.write(&name, &distribution_text(&outcome.dist, fmt))?;
    let pump = &bundle.pump;
    let stats = json!({
        "mode": pump.mode,
        "tau1": pump.duration_tau1,
        "tau2": if pump.mode == PumpMode::Traveling { Some(pump.traveling_duration_tau2) } else { None },
        "stats": outcome.row,
    });
    run.artifacts.write(&join(prefix, "pump_stats.json"), &pretty(&stats))?;
    if run.svg() {
        let series: Vec<Series<'_>> = Level::ALL
            .iter()
            .map(|&l| Series {
                label: level_name(l),
                points: outcome
                    .dist
                    .populated()
                    .into_iter()
                    .filter(|e| e.0 == l)
                    .map(|e| (e.1 as f64, e.2))
                    .collect(),
            })
            .collect();
        let title = format!("momentum distribution, {:?} pump", pump.mode).to_lowercase();
        run.artifacts
            .write(&join(prefix, "distribution.svg"), &impulses(&title, "m", "probability", &series))?;
    }
    Ok(outcome)
}

fn cmd_pump(run: &mut Run) -> Result<()> {
    let bundle = run.config.bundle()?;
    let o = write_pump(run, "", &bundle)?;
    run.summary.push(format!(
        "norm {:.12}, {} populated states, asymmetry {:.3e}",
        o.row.norm, o.row.populated_count, o.row.asymmetry
    ));
    Ok(())
}

fn formula_name(f: Formula) -> &'static str {
    match f {
        Formula::Full => "full",
        Formula::Diagonal => "diagonal",
    }
}

#[derive(Clone, Debug, Serialize)]
struct SpectrumRow {
    formula: Formula,
    max_absorbance: f64,
    resonance_count: usize,
    warnings: Vec<String>,
}

fn write_spectra(
    run: &mut Run,
    prefix: &str,
    bundle: &SpecBundle,
    pumped: &PumpOutcome,
    formulas: &[Formula],
) -> Result<Vec<(AbsorptionSpectrum, ResonanceSet)>> {
    let fmt = run.format();
    let mut out = Vec::new();
    for &f in formulas {
        let source = match f {
            Formula::Full => SpectrumSource::Full(&pumped.spectrum),
            Formula::Diagonal => SpectrumSource::Diagonal(&pumped.dist),
        };
        let s = scan_spectrum(source, &bundle.medium, &bundle.probe)?;
        let r = find_resonances(&s, &bundle.probe)?;
        let name = formula_name(f);
        run.artifacts
            .write(&join(prefix, &format!("spectrum_{name}.{}", extension(fmt))), &spectrum_text(&s, fmt))?;
        run.artifacts.write(&join(prefix, &format!("resonances_{name}.json")), &pretty(&r))?;
        if run.svg() {
            let series = [Series {
                label: name,
                points: s.points.iter().map(|p| (p.detuning, p.absorbance)).collect(),
            }];
            let title = format!("absorbance, {name} form");
            run.artifacts.write(
                &join(prefix, &format!("spectrum_{name}.svg")),
                &lines(&title, "detuning", "absorbance", &series),
            )?;
        }
        out.push((s, r));
    }
    Ok(out)
}

fn cmd_spectrum(run: &mut Run, choice: Option<FormulaChoice>) -> Result<()> {
    let formulas = match choice {
        Some(FormulaChoice::Full) => vec![Formula::Full],
        Some(FormulaChoice::Diagonal) => vec![Formula::Diagonal],
        Some(FormulaChoice::Both) => vec![Formula::Full, Formula::Diagonal],
        None => vec![run.config.probe.formula],
    };
    let bundle = run.config.bundle()?;
    let pumped = pump_stage(&bundle)?;
    let spectra = write_spectra(run, "", &bundle, &pumped, &formulas)?;
    let rows: Vec<SpectrumRow> = spectra
        .iter()
        .map(|(s, r)| SpectrumRow {
            formula: s.metadata.formula,
            max_absorbance: s.max_absorbance(),
            resonance_count: r.len(),
            warnings: s.metadata.warnings.clone(),
        })
        .collect();
    let deviation = match spectra.as_slice() {
        [(a, _), (b, _)] => {
            let ratio = a
                .points
                .iter()
                .zip(&b.points)
                .map(|(p, q)| (p.abs_ratio() - q.abs_ratio()).abs())
                .fold(0.0, f64::max);
            Some(json!({ "max_abs_ratio": ratio, "max_absorbance": a.distance(b) }))
        }
        _ => None,
    };
    let stats = json!({
        "populated_count": pumped.row.populated_count,
        "unit_depth": spectra[0].0.metadata.unit_depth(),
        "spectra": rows,
        "full_vs_diagonal_deviation": deviation,
    });
    run.artifacts.write("spectrum_stats.json", &pretty(&stats))?;
    for row in &rows {
        run.summary.push(format!(
            "{} form: {} resonances, max absorbance {:.6e}",
            formula_name(row.formula),
            row.resonance_count,
            row.max_absorbance
        ));
    }
    Ok(())
}

/// Everything classify needs to rebuild a cell's spectra.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellContext {
    pub protocol: ExperimentProtocol,
    pub populated_count: usize,
    pub few_atom: bool,
    pub probe_points: Vec<f64>,
    pub bundle: SpecBundle,
    pub spectrum_metadata: SpectrumMetadata,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Truth {
    pub hypothesis: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StoredObservation {
    pub atoms: Vec<AtomState>,
    pub resonances: ResonanceSet,
    pub max_absorbance: f64,
    /// SHA-256 of the spectrum in CSV form.
    pub spectrum_sha256: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StoredRealization {
    pub index: usize,
    pub seed: u64,
    pub tau2: Vec<f64>,
    pub between: Option<StoredObservation>,
    pub observations: Vec<StoredObservation>,
}

fn store(o: &kapitza_core::measurement::Observation) -> StoredObservation {
    StoredObservation {
        atoms: o.atoms.clone(),
        resonances: o.resonances.clone(),
        max_absorbance: o.spectrum.max_absorbance(),
        spectrum_sha256: sha256_hex(spectrum_csv(&o.spectrum).as_bytes()),
    }
}

fn sweep_for(protocol: &ExperimentProtocol) -> Vec<f64> {
    match protocol.stages {
        Stages::StandingOnly => Vec::new(),
        Stages::StandingThenTraveling => protocol.tau2_sweep.clone(),
    }
}

fn cmd_scenario(run: &mut Run, cells: &[Hypothesis], write_spectra: bool) -> Result<()> {
    let bundle = run.config.bundle()?;
    let protocol = run.config.protocol.clone();
    protocol.validate()?;
    let model = ScenarioModel::new(&bundle, &sweep_for(&protocol))?;
    let cells = if cells.is_empty() { Hypothesis::ALL.to_vec() } else { cells.to_vec() };
    let fmt = run.format();
    for h in cells {
        let set = realize_set(&model, h, &protocol)?;
        let dir = h.to_string();
        let context = CellContext {
            protocol: protocol.clone(),
            populated_count: set.populated_count,
            few_atom: set.few_atom,
            probe_points: protocol.probe_points(),
            bundle: bundle.clone(),
            spectrum_metadata: set.realizations[0].observations[0].spectrum.metadata.clone(),
        };
        run.artifacts.write(&format!("{dir}/context.json"), &pretty(&context))?;
        run.artifacts
            .write(&format!("{dir}/truth.json"), &pretty(&Truth { hypothesis: dir.clone() }))?;
        let stored: Vec<StoredRealization> = set
            .realizations
            .iter()
            .map(|r| StoredRealization {
                index: r.index,
                seed: r.seed,
                tau2: r.tau2.clone(),
                between: r.between.as_ref().map(store),
                observations: r.observations.iter().map(store).collect(),
            })
            .collect();
        run.artifacts.write(&format!("{dir}/realizations.json"), &pretty(&stored))?;
        if write_spectra {
            let ext = extension(fmt);
            for r in &set.realizations {
                if let Some(b) = &r.between {
                    let name = format!("{dir}/spectra/r{:03}_between.{ext}", r.index);
                    run.artifacts.write(&name, &spectrum_text(&b.spectrum, fmt))?;
                }
                for (k, o) in r.observations.iter().enumerate() {
                    let name = format!("{dir}/spectra/r{:03}_p{k}.{ext}", r.index);
                    run.artifacts.write(&name, &spectrum_text(&o.spectrum, fmt))?;
                }
            }
        }
        if run.svg() {
            let first = &set.realizations[0];
            let series: Vec<Series<'_>> = first
                .observations
                .iter()
                .take(3)
                .map(|o| Series {
                    label: "",
                    points: o.spectrum.points.iter().map(|p| (p.detuning, p.absorbance)).collect(),
                })
                .collect();
            run.artifacts.write(
                &format!("{dir}/realization_000.svg"),
                &lines(&format!("{dir}, realization 0"), "detuning", "absorbance", &series),
            )?;
        }
        let distinct = {
            let mut d: Vec<&str> = stored
                .iter()
                .flat_map(|r| r.observations.iter().map(|o| o.spectrum_sha256.as_str()))
                .collect();
            d.sort_unstable();
            d.dedup();
            d.len()
        };
        run.summary.push(format!(
            "{dir}: {} realizations, {distinct} distinct spectra",
            set.realizations.len()
        ));
    }
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Cell directories under `input`, in name order.
fn cell_dirs(input: &Path) -> Result<Vec<PathBuf>> {
    if input.join("context.json").is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let entries = std::fs::read_dir(input).map_err(|e| CliError::io(input, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(input, e))?.path();
        if path.join("context.json").is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    if dirs.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: no scenario output (context.json) found",
            input.display()
        )));
    }
    Ok(dirs)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellVerdict {
    pub input: String,
    pub truth: Option<String>,
    pub candidates: Vec<String>,
    pub unique: Option<String>,
    pub correct: Option<bool>,
    pub verdict: ClassifierVerdict,
}

/// Rebuilds a cell's spectra from its stored atoms and classifies them.
pub fn classify_cell(dir: &Path) -> Result<ClassifierVerdict> {
    let ctx: CellContext = read_json(&dir.join("context.json"))?;
    let stored: Vec<StoredRealization> = read_json(&dir.join("realizations.json"))?;
    let model = ScenarioModel::new(&ctx.bundle, &sweep_for(&ctx.protocol))?;
    let traveling = ctx.protocol.stages == Stages::StandingThenTraveling;
    let rebuilt = exec::try_map_indexed(stored.len(), |i| -> Result<Vec<AbsorptionSpectrum>> {
        let r = &stored[i];
        r.observations
            .iter()
            .enumerate()
            .map(|(k, o)| {
                let obs = model.observe_atoms(o.atoms.clone(), traveling.then_some(k))?;
                if sha256_hex(spectrum_csv(&obs.spectrum).as_bytes()) != o.spectrum_sha256 {
                    return Err(CliError::Validation(format!(
                        "{}: realization {} point {k} does not reproduce its stored spectrum digest",
                        dir.display(),
                        r.index
                    )));
                }
                Ok(obs.spectrum)
            })
            .collect()
    })?;
    let refs: Vec<Vec<&AbsorptionSpectrum>> = rebuilt.iter().map(|r| r.iter().collect()).collect();
    let cctx = ClassifierContext {
        protocol: ctx.protocol.clone(),
        populated_count: model.populated_count(),
        probe: ctx.bundle.probe.clone(),
    };
    Ok(classify(&refs, &cctx)?)
}

fn cmd_classify(run: &mut Run, input: &Path, protocol: Option<ProtocolChoice>) -> Result<()> {
    let mut verdicts = Vec::new();
    for dir in cell_dirs(input)? {
        if let Some(p) = protocol {
            let ctx: CellContext = read_json(&dir.join("context.json"))?;
            if ctx.protocol.stages != Stages::from(p) {
                return Err(CliError::Validation(format!(
                    "{}: data were generated with {:?}, not {p:?}",
                    dir.display(),
                    ctx.protocol.stages
                )));
            }
        }
        let verdict = classify_cell(&dir)?;
        let truth = {
            let path = dir.join("truth.json");
            if path.is_file() {
                Some(read_json::<Truth>(&path)?.hypothesis)
            } else {
                None
            }
        };
        let unique = verdict.unique().map(|h| h.to_string());
        let correct = truth.as_ref().map(|t| unique.as_deref() == Some(t.as_str()));
        let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let candidates: Vec<String> = verdict.candidate_cells.iter().map(|h| h.to_string()).collect();
        run.summary.push(format!(
            "{name}: {{{}}}{}",
            candidates.join(", "),
            truth.as_ref().map(|t| format!(" (truth {t})")).unwrap_or_default()
        ));
        verdicts.push(CellVerdict {
            input: name,
            truth,
            candidates,
            unique,
            correct,
            verdict,
        });
    }
    run.artifacts.write("verdicts.json", &pretty(&verdicts))?;
    Ok(())
}

fn parse_value(text: &str) -> toml::Value {
    if let Ok(i) = text.parse::<i64>() {
        toml::Value::Integer(i)
    } else if let Ok(x) = text.parse::<f64>() {
        toml::Value::Float(x)
    } else if let Ok(b) = text.parse::<bool>() {
        toml::Value::Boolean(b)
    } else {
        toml::Value::String(text.to_string())
    }
}

/// Copy of `config` with one parameter replaced. `zeta` sets both Rabi
/// parameters; `tau2` sets the traveling duration and switches the pump to
/// the traveling mode.
pub fn with_param(config: &Config, name: &str, value: &str) -> Result<Config> {
    let keys: Vec<&str> = match name {
        "zeta" => vec!["pump.zeta_1", "pump.zeta_2"],
        "tau2" => vec!["pump.traveling_duration_tau2"],
        other => vec![other],
    };
    let mut doc = toml::Value::try_from(config).map_err(|e| CliError::Validation(e.to_string()))?;
    for key in keys {
        let (section, field) = key
            .split_once('.')
            .ok_or_else(|| CliError::Validation(format!("parameter `{key}` must look like section.field")))?;
        let table = doc
            .as_table_mut()
            .expect("config is a table")
            .entry(section)
            .or_insert_with(|| toml::Value::Table(Default::default()));
        let table = table
            .as_table_mut()
            .ok_or_else(|| CliError::Validation(format!("`{section}` is not a section")))?;
        table.insert(field.to_string(), parse_value(value));
    }
    if name == "tau2" {
        doc["pump"]
            .as_table_mut()
            .expect("pump section")
            .insert("mode".into(), toml::Value::String("traveling".into()));
    }
    doc.try_into()
        .map_err(|e: toml::de::Error| CliError::Validation(format!("{name} = {value}: {e}")))
}

fn cmd_sweep(run: &mut Run, param: &str, values: &[String]) -> Result<()> {
    let values: Vec<&str> = values.iter().map(|v| v.trim()).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(CliError::Validation("sweep: --values needs at least one value".into()));
    }
    let configs = values
        .iter()
        .map(|v| with_param(&run.config, param, v))
        .collect::<Result<Vec<_>>>()?;
    let bundles = configs.iter().map(|c| c.bundle()).collect::<Result<Vec<_>>>()?;
    let mut summary = String::from(
        "index,value,norm,populated_count,ground_mean_m,mean_m_g1,mean_m_g2,asymmetry,max_absorbance,resonance_count\n",
    );
    let formula = run.config.probe.formula;
    for (i, (value, bundle)) in values.iter().zip(&bundles).enumerate() {
        let prefix = format!("value_{i:02}");
        let pumped = write_pump(run, &prefix, bundle)?;
        let spectra = write_spectra(run, &prefix, bundle, &pumped, &[formula])?;
        let (s, r) = &spectra[0];
        let row = &pumped.row;
        summary.push_str(&format!(
            "{i},{value},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            row.norm,
            row.populated_count,
            row.ground_mean_m,
            row.mean_m[0],
            row.mean_m[1],
            row.asymmetry,
            s.max_absorbance(),
            r.len()
        ));
        run.summary.push(format!(
            "{param} = {value}: ground mean m {:+.4}, asymmetry {:.3e}",
            row.ground_mean_m, row.asymmetry
        ));
    }
    run.artifacts.write("summary.csv", &summary)?;
    Ok(())
}
