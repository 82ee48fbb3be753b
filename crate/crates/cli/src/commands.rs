use std::path::{Path, PathBuf};

use mirrorforge::cgan::{extrapolation_protocol, train as train_cgan, CganMode, CganModel};
use mirrorforge::dataset::{
    fit_scaling, generate_linear, generate_nonlinear, partition_at, split, SampleSet, UNIT_INTERVAL,
};
use mirrorforge::distributions::{
    density_curves, write_alpha_csv, write_density_csv, CodeSamples, MirrorReport,
};
use mirrorforge::sfem::{calibrate as calibrate_sfem, SfemCalibration};
use mirrorforge::Error;
use serde::{Deserialize, Serialize};

use crate::config::{Case, ExperimentConfig, Stage};
use crate::Failure;

type Outcome = Result<(), Failure>;

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| {
        Failure::Domain(Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    std::fs::write(path, text + "\n").map_err(|e| {
        Failure::Domain(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

fn read_dataset(path: &Path) -> Result<SampleSet, Failure> {
    Ok(SampleSet::read(path)
        .map_err(|e| e.context(format!("reading dataset {}", path.display())))?
        .unscaled())
}

fn print_report(label: &str, r: &MirrorReport) {
    let p = |a| r.probability_at(a).map_or("-".into(), |v| format!("{v:.3}"));
    println!(
        "{label:<28} codes {:>2}  average KL {:.4}  epsilon {:.4}  P(2) {}  P(3) {}",
        r.codes.len(),
        r.average_kl,
        r.epsilon,
        p(2.0),
        p(3.0)
    );
}

pub fn generate(config: &ExperimentConfig, case: Case, force: bool) -> Outcome {
    let path = config.data_path(case);
    if path.exists() && !force {
        return Err(Failure::Usage(format!(
            "{} already exists (pass --force to overwrite)",
            path.display()
        )));
    }
    ensure_dir(&config.paths.data_dir)?;
    let seed = config.stage_seed(Stage::Generate, &[case as u64]);
    let set = match case {
        Case::Linear => {
            let lin = &config.generate.linear;
            generate_linear(&config.truth()?, &config.geometry, &lin.loads.values(), lin.n_per_load, seed)?
        }
        Case::Nonlinear => generate_nonlinear(&config.generate.nonlinear, &config.geometry, seed)?,
    };
    set.write(&path)?;
    println!("{} records -> {}", set.len(), path.display());
    println!("{:>8} {:>6} {:>13} {:>13}", "load", "n", "mean", "std");
    for s in set.summary() {
        println!("{:>8} {:>6} {:>13.6e} {:>13.6e}", s.load, s.count, s.mean, s.std_dev);
    }
    Ok(())
}

pub fn calibrate(config: &ExperimentConfig, case: Case) -> Outcome {
    let data = read_dataset(&config.data_path(case))?;
    let parts = split(&data, config.split_for(case))?;
    let calibration = calibrate_sfem(&parts.train, &config.calibrate.grid, &config.sfem())?;
    ensure_dir(&config.paths.model_dir)?;
    write_json(&config.calibration_path(case), &calibration)?;

    let model = calibration.model()?;
    let seed = config.report_seed();
    let n = config.calibrate.n_report;
    let evaluate = |set: &SampleSet| -> Result<MirrorReport, Failure> {
        let groups = model.sample_groups(&set.codes(), n, seed);
        Ok(MirrorReport::evaluate(
            "sfem",
            &groups,
            &set.groups(),
            &calibration.scaling.displacement,
            config.calibrate.tolerance,
            &config.metric,
        )?)
    };
    let all = evaluate(&data)?;
    let test = evaluate(&parts.test)?;
    ensure_dir(&config.paths.report_dir)?;
    let stem = config.paths.report_dir.join(format!("sfem-{}", case.name()));
    write_json(&stem.with_extension("json"), &all)?;
    write_json(&suffixed(&stem, "-test.json"), &test)?;
    write_alpha_csv(&suffixed(&stem, "-alpha.csv"), &all.alpha_curve)?;

    let b = calibration.best;
    println!(
        "best mean {:.4e}  std {:.4e}  correlation length {}  training KL {:.4}",
        b.mean, b.std_dev, b.correlation_length, calibration.best_score
    );
    print_report("all loads", &all);
    print_report("test loads", &test);
    Ok(())
}

fn suffixed(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    s.into()
}

fn read_calibration(path: &Path) -> Result<SfemCalibration, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Io {
            path: path.to_path_buf(),
            source: e,
        }
        .context("hybrid mode needs a calibration; run `calibrate` first")
    })?;
    Ok(serde_json::from_str(&text).map_err(Error::from)?)
}

pub fn train(config: &ExperimentConfig, case: Case, hybrid: bool) -> Outcome {
    let data = read_dataset(&config.data_path(case))?;
    let parts = split(&data, config.split_for(case))?;
    let mode = if hybrid {
        let sfem = read_calibration(&config.calibration_path(case))?.model()?;
        CganMode::Hybrid { sfem: Box::new(sfem) }
    } else {
        CganMode::BlackBox
    };
    let label = mode.label();
    let settings = config.train_config(&[case as u64, hybrid as u64]);
    let outcome = train_cgan(&parts.train, &parts.val, &settings, mode)?;
    for f in &outcome.failures {
        eprintln!("warning: hidden size {} failed: {}", f.hidden_size, f.error);
    }

    ensure_dir(&config.paths.model_dir)?;
    let stem = config.paths.model_dir.join(format!("{label}-{}", case.name()));
    outcome.model.write_json(&stem.with_extension("json"))?;
    outcome.write_trace_csv(&suffixed(&stem, "-trace.csv"))?;

    let seed = config.report_seed();
    let test = outcome.model.report(
        &parts.test,
        config.train.n_report,
        seed,
        config.train.tolerance,
        &config.metric,
    )?;
    ensure_dir(&config.paths.report_dir)?;
    write_json(
        &config.paths.report_dir.join(format!("{label}-{}-test.json", case.name())),
        &test,
    )?;
    println!(
        "best hidden size {} at epoch {}  validation KL {:.4}",
        outcome.hidden_size, outcome.epoch, outcome.val_kl
    );
    print_report("test loads", &test);
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ModelFile {
    Cgan(Box<CganModel>),
    Sfem(Box<SfemCalibration>),
}

pub fn evaluate(config: &ExperimentConfig, model_path: &Path, data_path: &Path, out: Option<PathBuf>) -> Outcome {
    let data = read_dataset(data_path)?;
    let codes = data.codes();
    let n = config.evaluate.n_samples;
    let seed = config.report_seed();
    let stem = model_path.file_stem().unwrap_or_default().to_string_lossy().into_owned();

    let (id, generated, scaling): (String, Vec<CodeSamples>, _) =
        if model_path.extension().is_some_and(|e| e == "csv") {
            let model = read_dataset(model_path)?;
            let scaling = fit_scaling(&model, UNIT_INTERVAL)?;
            (format!("dataset:{stem}"), model.select(&codes).groups(), scaling)
        } else {
            let text = std::fs::read_to_string(model_path).map_err(|e| Error::Io {
                path: model_path.to_path_buf(),
                source: e,
            })?;
            let parsed: ModelFile = serde_json::from_str(&text).map_err(|_| {
                Error::Invalid {
                    what: "model file",
                    reason: format!("{} is neither a trained GAN nor an SFE calibration", model_path.display()),
                }
            })?;
            match parsed {
                ModelFile::Cgan(m) => {
                    m.validate()?;
                    (m.mode.label().to_string(), m.generate_groups(&codes, n, seed)?, m.scaling)
                }
                ModelFile::Sfem(c) => ("sfem".to_string(), c.model()?.sample_groups(&codes, n, seed), c.scaling),
            }
        };

    let report = MirrorReport::evaluate(
        id,
        &generated,
        &data.groups(),
        &scaling.displacement,
        config.evaluate.tolerance,
        &config.metric,
    )?;
    let curves = density_curves(&generated, &data.groups(), &scaling.displacement, &config.metric)?;
    let prefix = match out {
        Some(p) => p,
        None => {
            ensure_dir(&config.paths.report_dir)?;
            config.paths.report_dir.join(format!("evaluate-{stem}"))
        }
    };
    write_json(&suffixed(&prefix, ".json"), &report)?;
    write_density_csv(&suffixed(&prefix, "-density.csv"), &curves)?;
    write_alpha_csv(&suffixed(&prefix, "-alpha.csv"), &report.alpha_curve)?;
    print_report(&report.model_id, &report);
    Ok(())
}

pub fn extrapolate(config: &ExperimentConfig) -> Outcome {
    let data = read_dataset(&config.data_path(Case::Nonlinear))?;
    let settings = config.extrapolation();
    let (fit, held_out) = partition_at(&data, settings.boundary);
    let outcome = extrapolation_protocol(&fit, &held_out, &settings)?;
    ensure_dir(&config.paths.report_dir)?;
    let dir = &config.paths.report_dir;
    write_json(&dir.join("extrapolate-black-box.json"), &outcome.black_box.held_out)?;
    write_json(&dir.join("extrapolate-hybrid.json"), &outcome.hybrid.held_out)?;
    write_json(&dir.join("extrapolate-outcome.json"), &outcome)?;
    for (label, r) in [("black-box", &outcome.black_box), ("hybrid", &outcome.hybrid)] {
        println!("{label}: hidden size {}  validation KL {:.4}", r.hidden_size, r.val_kl);
        print_report("  test loads", &r.test);
        print_report("  held-out loads", &r.held_out);
    }
    Ok(())
}

pub fn report(config: &ExperimentConfig) -> Outcome {
    let dir = &config.paths.report_dir;
    let entries = std::fs::read_dir(dir).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    let mut csv = String::from("file,model,codes,average_kl,epsilon,tolerance,pass_epsilon,p2,p3\n");
    let mut found = 0;
    for path in &paths {
        let Ok(r) = MirrorReport::read_json(path) else {
            continue;
        };
        found += 1;
        let name = path.file_name().unwrap_or_default().to_string_lossy();
        let p = |a| r.probability_at(a).map_or(String::new(), |v| v.to_string());
        csv.push_str(&format!(
            "{name},{},{},{},{},{},{},{},{}\n",
            r.model_id,
            r.codes.len(),
            r.average_kl,
            r.epsilon,
            r.tolerance,
            r.pass_epsilon,
            p(2.0),
            p(3.0)
        ));
        print_report(&name, &r);
    }
    if found == 0 {
        println!("no reports in {}", dir.display());
        return Ok(());
    }
    let summary = dir.join("summary.csv");
    std::fs::write(&summary, csv).map_err(|e| Error::Io {
        path: summary.clone(),
        source: e,
    })?;
    println!("summary -> {}", summary.display());
    Ok(())
}
