use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Serialize;

use dronecell_core::features::{simulate, stratified_split};
use dronecell_core::fieldtrial::{self, summarize, trial_gate, HeightBin, TrialSummary};
use dronecell_core::linkrate::{calibrated_peak_rate_bps, Direction};
use dronecell_core::ml::oracle::brute_force_tree;
use dronecell_core::ml::{evaluate, probability_grid, train_logistic, train_tree};
use dronecell_core::radio::write_samples_csv;
use dronecell_core::requirements::{ComplianceReport, Rate5gEntry};
use dronecell_core::{build_hex_layout, standardize, Dataset, KpiReport, Label, Metrics, Model, NetworkLayout, Registry, Verdict};

use crate::config::{ExperimentConfig, LayoutConfig};
use crate::output::{write_atomic, write_json, Run};
use crate::{Command, LayoutArgs, ModelKind};

/// Run one subcommand; returns the process exit code.
pub fn dispatch(cmd: &Command, cfg: &mut ExperimentConfig, run: &mut Run) -> anyhow::Result<u8> {
    match cmd {
        Command::Layout(args) => {
            apply_layout(&mut cfg.layout, args);
            cfg.validate()?;
            let layout = layout(&cfg.layout)?;
            let path = cfg.output_dir.join("layout.csv");
            write_atomic(&path, |w| Ok(layout.write_csv(w)?))?;
            run.output(&path);
            println!("{} cells at {} sites -> {}", layout.cells.len(), layout.sites.len(), path.display());
        }
        Command::Simulate { layout: args, indoor, outdoor, aerial_per_height, heights } => {
            apply_layout(&mut cfg.layout, args);
            let p = &mut cfg.placement;
            set(&mut p.indoor, *indoor);
            set(&mut p.outdoor, *outdoor);
            set(&mut p.aerial_per_height, *aerial_per_height);
            set(&mut p.aerial_heights_m, heights.clone());
            cfg.validate()?;
            let layout = layout(&cfg.layout)?;
            let (samples, data) = simulate(&layout, &cfg.placement, &cfg.channel, cfg.seed)?;
            let ds = cfg.output_dir.join("dataset.csv");
            write_atomic(&ds, |w| Ok(data.write_csv(w)?))?;
            run.output(&ds);
            let rs = cfg.output_dir.join("radio_samples.csv");
            write_atomic(&rs, |w| Ok(write_samples_csv(&samples, w)?))?;
            run.output(&rs);
            println!(
                "{} samples ({} drone, {} terrestrial) -> {}",
                data.len(),
                data.count(Label::Drone),
                data.count(Label::Terrestrial),
                ds.display()
            );
        }
        Command::Train {
            dataset,
            model,
            train_fraction,
            max_depth,
            min_leaf,
            learning_rate,
            max_iters,
            tolerance,
            l2,
        } => {
            let ml = &mut cfg.ml;
            set(&mut ml.train_fraction, *train_fraction);
            set(&mut ml.tree.max_depth, *max_depth);
            set(&mut ml.tree.min_leaf, *min_leaf);
            set(&mut ml.logistic.learning_rate, *learning_rate);
            set(&mut ml.logistic.max_iters, *max_iters);
            set(&mut ml.logistic.tolerance, *tolerance);
            set(&mut ml.logistic.l2, *l2);
            cfg.validate()?;
            let path = dataset_path(cfg, dataset);
            let data = read_dataset(&path, run)?;
            let (train, test) = stratified_split(&data, cfg.ml.train_fraction, cfg.seed)?;
            if train.is_empty() {
                bail!("no training samples in {}", path.display());
            }
            for label in [Label::Drone, Label::Terrestrial] {
                if train.count(label) == 0 {
                    bail!("training split of {} has no {} samples; both labels are required", path.display(), label.as_str());
                }
            }
            let trained = match model {
                ModelKind::Logistic => {
                    let (z, _) = standardize(&train)?;
                    Model::Logistic(train_logistic(&z, &cfg.ml.logistic)?)
                }
                ModelKind::Tree => Model::Tree(train_tree(&train, &cfg.ml.tree)?),
            };
            let kind = trained.kind();
            let model_path = cfg.output_dir.join(format!("model_{kind}.json"));
            let text = trained.to_json()?;
            write_atomic(&model_path, |w| Ok(w.write_all(text.as_bytes())?))?;
            run.output(&model_path);

            let metrics = TrainMetrics {
                model: kind,
                threshold: cfg.ml.threshold,
                train_size: train.len(),
                test_size: test.len(),
                train: evaluate(&trained, &train, cfg.ml.threshold)?,
                test: if test.is_empty() { None } else { Some(evaluate(&trained, &test, cfg.ml.threshold)?) },
            };
            let metrics_path = cfg.output_dir.join(format!("metrics_{kind}.json"));
            write_json(&metrics_path, &metrics)?;
            run.output(&metrics_path);
            match &metrics.test {
                Some(m) => println!("{kind}: held-out accuracy {:.4} on {} samples", m.accuracy, test.len()),
                None => println!("{kind}: no held-out samples; training accuracy {:.4}", metrics.train.accuracy),
            }
        }
        Command::Grid { model, rsrp_std_min, rsrp_std_max, rsrp_std_steps, rssi_min, rssi_max, rssi_steps } => {
            let g = &mut cfg.grid;
            set(&mut g.rsrp_std.min, *rsrp_std_min);
            set(&mut g.rsrp_std.max, *rsrp_std_max);
            set(&mut g.rsrp_std.steps, *rsrp_std_steps);
            set(&mut g.rssi.min, *rssi_min);
            set(&mut g.rssi.max, *rssi_max);
            set(&mut g.rssi.steps, *rssi_steps);
            cfg.validate()?;
            let m = read_model(model, run)?;
            let grid = probability_grid(&m, cfg.grid.rsrp_std, cfg.grid.rssi)?;
            let path = cfg.output_dir.join(format!("grid_{}.csv", m.kind()));
            write_atomic(&path, |w| Ok(grid.write_csv(w)?))?;
            run.output(&path);
            println!("{} grid points -> {}", grid.values.len(), path.display());
        }
        Command::Evaluate { model, dataset, threshold } => {
            set(&mut cfg.ml.threshold, *threshold);
            cfg.validate()?;
            let m = read_model(model, run)?;
            let data = read_dataset(&dataset_path(cfg, dataset), run)?;
            let metrics = evaluate(&m, &data, cfg.ml.threshold)?;
            let path = cfg.output_dir.join(format!("evaluation_{}.json", m.kind()));
            write_json(&path, &metrics)?;
            run.output(&path);
            println!("{}: accuracy {:.4} precision {:.4} recall {:.4}", m.kind(), metrics.accuracy, metrics.precision, metrics.recall);
        }
        Command::Gate { application, kpis, trial, bin, registry } => {
            cfg.validate()?;
            let registry = match registry {
                Some(p) => {
                    run.input(p);
                    let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    Registry::from_json(&text).with_context(|| format!("registry {}", p.display()))?
                }
                None => Registry::builtin(),
            };
            let profile = registry.lookup(application)?;
            let path = cfg.output_dir.join("gate_report.json");
            let verdict = if let Some(kpi_path) = kpis {
                run.input(kpi_path);
                let text = std::fs::read_to_string(kpi_path).with_context(|| format!("reading {}", kpi_path.display()))?;
                let de = &mut serde_json::Deserializer::from_str(&text);
                let report: KpiReport = serde_path_to_error::deserialize(de)
                    .map_err(|e| anyhow::anyhow!("{}: at `{}`: {}", kpi_path.display(), e.path(), e.inner()))?;
                report.validate()?;
                let r = dronecell_core::gate(&report, &profile);
                println!("{r}");
                write_json(&path, &r)?;
                r.verdict
            } else {
                let log = trial.as_ref().expect("clap enforces --kpis or --trial");
                let summary = summarize_log(cfg, log, run)?;
                let bins: Vec<HeightBin> = match bin {
                    Some(hi) => vec![summary
                        .bins
                        .iter()
                        .map(|b| b.bin)
                        .find(|b| b.hi_m == *hi)
                        .with_context(|| format!("no trial bin with upper edge {hi} m"))?],
                    None => summary.bins.iter().filter(|b| b.stats.count > 0).map(|b| b.bin).collect(),
                };
                if bins.is_empty() {
                    bail!("trial log {} has no records in any height bin", log.display());
                }
                let mut reports = Vec::new();
                let mut verdict = Verdict::Pass;
                for b in bins {
                    let r = trial_gate(&summary, &profile, b)?;
                    println!("height bin ({}, {}] m", b.lo_m, b.hi_m);
                    println!("{r}");
                    verdict = verdict.worst(r.verdict);
                    reports.push(BinReport { bin: b, report: r });
                }
                write_json(&path, &TrialGateReport { application: profile.application.clone(), bins: reports, verdict })?;
                verdict
            };
            run.output(&path);
            return Ok(verdict.exit_code() as u8);
        }
        Command::Trial { log, bins } => {
            set(&mut cfg.trial.bin_edges_m, bins.clone());
            cfg.validate()?;
            let summary = summarize_log(cfg, log, run)?;
            let json = cfg.output_dir.join("trial_summary.json");
            write_json(&json, &summary)?;
            run.output(&json);
            let csv = cfg.output_dir.join("trial_summary.csv");
            write_atomic(&csv, |w| Ok(summary.write_csv(w)?))?;
            run.output(&csv);
            println!(
                "{} records in {} bins ({} unbinned) -> {}",
                summary.total_count(),
                summary.bins.len(),
                summary.unbinned.count,
                json.display()
            );
        }
        Command::OracleTree { dataset, max_depth, min_leaf } => {
            set(&mut cfg.ml.tree.max_depth, *max_depth);
            set(&mut cfg.ml.tree.min_leaf, *min_leaf);
            cfg.validate()?;
            let data = read_dataset(&dataset_path(cfg, dataset), run)?;
            let tree = Model::Tree(brute_force_tree(&data, &cfg.ml.tree)?);
            let path = cfg.output_dir.join("oracle_tree.json");
            let text = tree.to_json()?;
            write_atomic(&path, |w| Ok(w.write_all(text.as_bytes())?))?;
            run.output(&path);
            println!("oracle tree -> {}", path.display());
        }
        Command::SynthTrial { per_height, heights } => {
            set(&mut cfg.trial.synth.per_height, *per_height);
            set(&mut cfg.trial.synth.heights_m, heights.clone());
            cfg.validate()?;
            let records = fieldtrial::synthesize(&cfg.trial.synth, cfg.seed)?;
            let path = cfg.output_dir.join("trial_log.csv");
            write_atomic(&path, |w| Ok(fieldtrial::write_csv(&records, w)?))?;
            run.output(&path);
            println!("{} synthetic records -> {}", records.len(), path.display());
        }
        Command::Rates { fc_ghz, radius_m } => {
            cfg.validate()?;
            let entries = Registry::builtin().expected_5g_rates(*fc_ghz, *radius_m)?;
            let rows: Vec<RateRow> = entries
                .into_iter()
                .map(|e| {
                    let (dl_layers, ul_layers) = (layers_of(&e.antenna_config, "DL"), layers_of(&e.antenna_config, "UL"));
                    RateRow {
                        dl_peak_estimate_bps: calibrated_peak_rate_bps(e.bw_hz, dl_layers, 8, Direction::Downlink),
                        ul_peak_estimate_bps: calibrated_peak_rate_bps(e.bw_hz, ul_layers, 6, Direction::Uplink),
                        reference: e,
                    }
                })
                .collect();
            for r in &rows {
                println!(
                    "{}: DL peak {:.3e} (estimate {:.3e}), UL peak {:.3e} (estimate {:.3e}), DL edge {:.3e}, UL edge {:.3e}",
                    r.reference.antenna_config,
                    r.reference.dl_peak_bps,
                    r.dl_peak_estimate_bps,
                    r.reference.ul_peak_bps,
                    r.ul_peak_estimate_bps,
                    r.reference.dl_edge_bps,
                    r.reference.ul_edge_bps
                );
            }
            let path = cfg.output_dir.join("rates.json");
            write_json(&path, &rows)?;
            run.output(&path);
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct TrainMetrics {
    model: &'static str,
    threshold: f64,
    train_size: usize,
    test_size: usize,
    train: Metrics,
    test: Option<Metrics>,
}

#[derive(Serialize)]
struct BinReport {
    bin: HeightBin,
    report: ComplianceReport,
}

#[derive(Serialize)]
struct TrialGateReport {
    application: String,
    bins: Vec<BinReport>,
    verdict: Verdict,
}

#[derive(Serialize)]
struct RateRow {
    reference: Rate5gEntry,
    dl_peak_estimate_bps: f64,
    ul_peak_estimate_bps: f64,
}

/// Layer count from an antenna description like "DL 4 TR 256 QAM, UL 2 TR 64 QAM".
fn layers_of(config: &str, direction: &str) -> u32 {
    config
        .split(',')
        .map(str::trim)
        .find_map(|part| part.strip_prefix(direction))
        .and_then(|rest| rest.split_whitespace().next())
        .and_then(|n| n.parse().ok())
        .unwrap_or(1)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_layout(cfg: &mut LayoutConfig, args: &LayoutArgs) {
    set(&mut cfg.rings, args.rings);
    set(&mut cfg.isd_m, args.isd_m);
}

fn layout(cfg: &LayoutConfig) -> anyhow::Result<NetworkLayout> {
    Ok(build_hex_layout(cfg.rings, cfg.isd_m, &cfg.cell)?)
}

fn dataset_path(cfg: &ExperimentConfig, given: &Option<PathBuf>) -> PathBuf {
    given.clone().unwrap_or_else(|| cfg.output_dir.join("dataset.csv"))
}

fn read_dataset(path: &Path, run: &mut Run) -> anyhow::Result<Dataset> {
    run.input(path);
    let f = File::open(path).with_context(|| format!("opening dataset {}", path.display()))?;
    Ok(Dataset::read_csv(BufReader::new(f), path)?)
}

fn read_model(path: &Path, run: &mut Run) -> anyhow::Result<Model> {
    run.input(path);
    let text = std::fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
    Model::from_json(&text).with_context(|| format!("model file {}", path.display()))
}

fn summarize_log(cfg: &ExperimentConfig, log: &Path, run: &mut Run) -> anyhow::Result<TrialSummary> {
    run.input(log);
    let records = fieldtrial::ingest_csv(log)?;
    Ok(summarize(&records, &HeightBin::from_edges(&cfg.trial.bin_edges_m), &cfg.trial.bands)?)
}
