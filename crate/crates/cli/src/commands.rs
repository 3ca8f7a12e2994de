use std::fs;
use std::path::Path;

use nigmg::decision::{evaluate, threshold_for_fdr};
use nigmg::ebayes::{calibrate_sparsity, default_init, mmle_fit, prior_pjap, FitMode, FitResult, FitSpec};
use nigmg::grove::{
    credible_bands, downward_marginals, pjap, posterior_mean_z, sample_posterior, upward_pass, BandTarget,
    GroveData, Indicator,
};
use nigmg::nodemodel::{FactorDesign, HyperParams};
use nigmg::simbench::{run_benchmark, BenchConfig, Method, Scenario};
use nigmg::wavelet::{inverse_dwt, TreeShape, WaveletFilter, WaveletName};

use crate::error::{CliError, CliResult};
use crate::io::{locations, read_data, read_design, write_curves, DataFile};
use crate::report::{
    DecisionSummary, FactorSummary, FitFile, FitSummary, OutputFile, PmapRow, Report, SCHEMA_VERSION,
};
use crate::{CalibrateArgs, DenoiseArgs, FanovaArgs, FitArgs, FitChoice, ModelArgs, SimulateArgs, SparsityArgs};

struct Loaded {
    data: DataFile,
    wavelet: WaveletName,
    filter: WaveletFilter<f64>,
    grove: GroveData<f64>,
}

fn load(model: &ModelArgs) -> CliResult<Loaded> {
    let wavelet: WaveletName = model
        .wavelet
        .parse()
        .map_err(|e: nigmg::Error| CliError::Usage(e.to_string()))?;
    let data = read_data(&model.input)?;
    let filter = WaveletFilter::new(wavelet);
    let grove = GroveData::from_signals(&data.signals, &filter)?;
    Ok(Loaded {
        data,
        wavelet,
        filter,
        grove,
    })
}

fn initial_params(model: &ModelArgs, grove: &GroveData<f64>, factors: usize) -> CliResult<HyperParams<f64>> {
    let hp = match &model.params {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let hp: HyperParams<f64> = serde_json::from_str(&text)?;
            if hp.factor_count() != factors {
                return Err(CliError::Data(format!(
                    "parameters carry {} effect scales for {factors} factors",
                    hp.factor_count()
                )));
            }
            hp
        }
        None => default_init(grove, factors),
    };
    hp.validate()?;
    Ok(hp)
}

/// `(eta_kappa, gamma_kappa)` requested on the command line, if any. Hybrid
/// fitting without an explicit choice calibrates to a prior PJAP of 0.5.
fn sparsity(args: &SparsityArgs, max_level: u32, fit: FitChoice) -> CliResult<Option<(f64, f64)>> {
    let gamma = args.gamma_kappa;
    let target = match (args.prior_pjap, args.eta_kappa) {
        (_, Some(eta)) => return Ok(Some((eta, gamma))),
        (Some(p), None) => p,
        (None, None) if fit == FitChoice::Hybrid => 0.5,
        (None, None) => return Ok(None),
    };
    Ok(Some((calibrate_sparsity(target, gamma, max_level)?, gamma)))
}

fn run_fit(
    loaded: &Loaded,
    design: &FactorDesign,
    model: &ModelArgs,
    fit: FitChoice,
    sparse: Option<(f64, f64)>,
) -> CliResult<(FitResult, String)> {
    let mut init = initial_params(model, &loaded.grove, design.factor_count())?;
    if let Some((eta, gamma)) = sparse {
        init.eta_kappa = eta;
        init.gamma_kappa = gamma;
    }
    let base = FitSpec {
        restarts: model.restarts,
        max_iters: model.max_iters,
        seed: model.seed,
        ..FitSpec::default()
    };
    let (spec, name) = match fit {
        FitChoice::Eb => (base, "full_eb"),
        FitChoice::Fixed => (
            FitSpec {
                mode: FitMode::Fixed,
                ..base
            },
            "fixed",
        ),
        FitChoice::Hybrid => {
            let pair = sparse.ok_or_else(|| CliError::Usage("hybrid fitting needs sparsity settings".into()))?;
            (
                FitSpec {
                    mode: FitMode::Hybrid,
                    fixed_sparsity: Some(pair),
                    ..base
                },
                "hybrid",
            )
        }
    };
    Ok((mmle_fit(&loaded.grove, design, &spec, &init)?, name.to_string()))
}

fn fit_summary(fit: &FitResult, mode: String) -> FitSummary {
    FitSummary {
        mode,
        initial_log_evidence: fit.initial_log_evidence,
        iterations: fit.iterations,
        converged: fit.converged,
    }
}

fn check_level(level: f64) -> CliResult<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--level must lie in (0,1), got {level}")))
    }
}

fn write_report(out_dir: &Path, report: &Report) -> CliResult<()> {
    fs::write(out_dir.join("report.json"), report.to_json())?;
    Ok(())
}

fn pmap_rows(shape: TreeShape, marg: &nigmg::grove::NodeMarginals<f64>, factors: usize) -> Vec<PmapRow> {
    shape
        .top_down()
        .map(|node| PmapRow {
            j: node.j,
            k: node.k,
            baseline: marg.pmap(Indicator::Baseline, node),
            factors: (0..factors).map(|l| marg.pmap(Indicator::Factor(l), node)).collect(),
        })
        .collect()
}

fn write_pmap_csv(path: &Path, rows: &[PmapRow], design: &FactorDesign) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["j".to_string(), "k".to_string(), "baseline".to_string()];
    header.extend(design.factors().iter().map(|f| f.name.clone()));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.j.to_string(), r.k.to_string(), r.baseline.to_string()];
        rec.extend(r.factors.iter().map(|p| p.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Posterior mean of `f` (father included), with a band when draws exist.
fn write_mean_curve(
    out_dir: &Path,
    loaded: &Loaded,
    grove: &nigmg::grove::PosteriorGrove<f64>,
    marg: &nigmg::grove::NodeMarginals<f64>,
    draws: Option<(&[nigmg::grove::PosteriorDraw<f64>], &FactorDesign, f64)>,
    outputs: &mut Vec<OutputFile>,
) -> CliResult<()> {
    let mean = inverse_dwt(&posterior_mean_z(grove, marg), &loaded.filter).into_inner();
    let locs = locations(&loaded.data);
    let path = "posterior_mean.csv";
    match draws {
        Some((draws, design, level)) => {
            let band = credible_bands(draws, &BandTarget::Baseline, design, level, true, &loaded.filter)?;
            write_curves(
                &out_dir.join(path),
                &locs,
                &[("mean", &mean), ("lower", &band.lower), ("upper", &band.upper)],
            )?;
        }
        None => write_curves(&out_dir.join(path), &locs, &[("mean", &mean)])?,
    }
    outputs.push(OutputFile {
        kind: "posterior_mean".into(),
        path: path.into(),
    });
    Ok(())
}

pub fn denoise(args: &DenoiseArgs) -> CliResult<()> {
    if args.fit == FitChoice::Hybrid {
        return Err(CliError::Usage("denoise has no factors; use --fit eb or fixed".into()));
    }
    check_level(args.level)?;
    let loaded = load(&args.model)?;
    let design = FactorDesign::intercept_only(loaded.data.signals.len());
    let (fit, mode) = run_fit(&loaded, &design, &args.model, args.fit, None)?;
    let g = upward_pass(&loaded.grove, &design, &fit.hyper)?;
    let marg = downward_marginals(&g);
    fs::create_dir_all(&args.out_dir)?;
    let mut outputs = Vec::new();
    let draws = if args.samples > 0 {
        Some(sample_posterior(&g, args.samples, args.model.seed)?)
    } else {
        None
    };
    write_mean_curve(
        &args.out_dir,
        &loaded,
        &g,
        &marg,
        draws.as_deref().map(|d| (d, &design, args.level)),
        &mut outputs,
    )?;
    let pmap = pmap_rows(loaded.grove.shape(), &marg, 0);
    write_pmap_csv(&args.out_dir.join("pmap.csv"), &pmap, &design)?;
    outputs.push(OutputFile {
        kind: "pmap".into(),
        path: "pmap.csv".into(),
    });
    let report = Report {
        schema_version: SCHEMA_VERSION,
        command: "denoise".into(),
        wavelet: loaded.wavelet.to_string(),
        observations: loaded.grove.n(),
        length: loaded.grove.shape().signal_len(),
        hyperparameters: fit.hyper.clone(),
        log_evidence: fit.log_evidence,
        fit: fit_summary(&fit, mode),
        baseline_pjap: pjap(&g, Indicator::Baseline)?,
        factors: Vec::new(),
        pmap,
        outputs,
    };
    write_report(&args.out_dir, &report)
}

/// `(factor, weights)` for a `[factor:]A-B` contrast.
fn parse_contrast(spec: &str, design: &FactorDesign) -> CliResult<(usize, String, Vec<f64>)> {
    let (factor, pair) = match spec.split_once(':') {
        Some((name, rest)) => {
            let l = design
                .factors()
                .iter()
                .position(|f| f.name == name)
                .ok_or_else(|| CliError::Usage(format!("contrast names unknown factor '{name}'")))?;
            (l, rest)
        }
        None => (0, spec),
    };
    let f = design.factor(factor);
    let (a, b) = pair
        .split_once('-')
        .ok_or_else(|| CliError::Usage(format!("contrast '{spec}' is not of the form A-B")))?;
    let ia = f
        .level_index(a)
        .ok_or_else(|| CliError::Usage(format!("factor '{}' has no level '{a}'", f.name)))?;
    let ib = f
        .level_index(b)
        .ok_or_else(|| CliError::Usage(format!("factor '{}' has no level '{b}'", f.name)))?;
    if ia == ib {
        return Err(CliError::Usage(format!("contrast '{spec}' compares a level with itself")));
    }
    let mut w = vec![0.0; f.group_count()];
    w[ia] += 1.0;
    w[ib] -= 1.0;
    let slug: String = format!("{}_{a}-{b}", f.name)
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect();
    Ok((factor, slug, w))
}

pub fn fanova(args: &FanovaArgs) -> CliResult<()> {
    check_level(args.level)?;
    if !(args.delta > 0.0 && args.delta < 1.0) {
        return Err(CliError::Usage(format!("--delta must lie in (0,1), got {}", args.delta)));
    }
    let loaded = load(&args.model)?;
    let design = read_design(&args.design, loaded.data.signals.len())?;
    let contrasts = args
        .contrast
        .iter()
        .map(|c| parse_contrast(c, &design))
        .collect::<CliResult<Vec<_>>>()?;
    let sparse = sparsity(&args.sparsity, loaded.grove.shape().max_level(), args.fit)?;
    let (fit, mode) = run_fit(&loaded, &design, &args.model, args.fit, sparse)?;
    let g = upward_pass(&loaded.grove, &design, &fit.hyper)?;
    let marg = downward_marginals(&g);
    fs::create_dir_all(&args.out_dir)?;
    let mut outputs = Vec::new();

    let samples = match (args.samples, contrasts.is_empty()) {
        (Some(n), _) => n,
        (None, false) => 1000,
        (None, true) => 0,
    };
    let draws = if samples > 0 {
        Some(sample_posterior(&g, samples, args.model.seed)?)
    } else {
        None
    };
    write_mean_curve(
        &args.out_dir,
        &loaded,
        &g,
        &marg,
        draws.as_deref().map(|d| (d, &design, args.level)),
        &mut outputs,
    )?;
    if let Some(draws) = &draws {
        let locs = locations(&loaded.data);
        for (factor, slug, weights) in &contrasts {
            let target = BandTarget::Contrast {
                factor: *factor,
                weights: weights.clone(),
            };
            let variants: &[bool] = if args.include_father { &[false, true] } else { &[false] };
            for &father in variants {
                let band = credible_bands(draws, &target, &design, args.level, father, &loaded.filter)?;
                let name = if father {
                    format!("contrast_{slug}_father.csv")
                } else {
                    format!("contrast_{slug}.csv")
                };
                write_curves(
                    &args.out_dir.join(&name),
                    &locs,
                    &[("mean", &band.mean), ("lower", &band.lower), ("upper", &band.upper)],
                )?;
                outputs.push(OutputFile {
                    kind: if father { "contrast_band_with_father" } else { "contrast_band" }.into(),
                    path: name,
                });
            }
        }
    }

    let mut factors = Vec::new();
    for (l, f) in design.factors().iter().enumerate() {
        let ind = Indicator::Factor(l);
        let pmaps = marg.pmap_table(ind)?;
        let delta = match args.fdr {
            Some(q) => threshold_for_fdr(&pmaps, q)?.delta(),
            None => args.delta,
        };
        let p = pjap(&g, ind)?;
        let d = evaluate(&pmaps, delta, l, Some(p))?;
        factors.push(FactorSummary {
            name: f.name.clone(),
            levels: f.levels.clone(),
            pjap: p,
            decision: DecisionSummary {
                delta: d.delta,
                fdr_target: args.fdr,
                called: d.called.iter().map(|n| [n.j, n.k]).collect(),
                nfp: d.nfp,
                fdr: d.fdr,
            },
        });
    }
    let pmap = pmap_rows(loaded.grove.shape(), &marg, design.factor_count());
    write_pmap_csv(&args.out_dir.join("pmap.csv"), &pmap, &design)?;
    outputs.push(OutputFile {
        kind: "pmap".into(),
        path: "pmap.csv".into(),
    });
    let report = Report {
        schema_version: SCHEMA_VERSION,
        command: "fanova".into(),
        wavelet: loaded.wavelet.to_string(),
        observations: loaded.grove.n(),
        length: loaded.grove.shape().signal_len(),
        hyperparameters: fit.hyper.clone(),
        log_evidence: fit.log_evidence,
        fit: fit_summary(&fit, mode),
        baseline_pjap: pjap(&g, Indicator::Baseline)?,
        factors,
        pmap,
        outputs,
    };
    write_report(&args.out_dir, &report)
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let loaded = load(&args.model)?;
    let n = loaded.data.signals.len();
    let design = match &args.design {
        Some(path) => read_design(path, n)?,
        None => FactorDesign::intercept_only(n),
    };
    if args.fit == FitChoice::Hybrid && design.factor_count() == 0 {
        return Err(CliError::Usage("hybrid fitting needs a design with factors".into()));
    }
    let sparse = if design.factor_count() > 0 {
        sparsity(&args.sparsity, loaded.grove.shape().max_level(), args.fit)?
    } else {
        None
    };
    let (fit, mode) = run_fit(&loaded, &design, &args.model, args.fit, sparse)?;
    let file = FitFile {
        schema_version: SCHEMA_VERSION,
        hyperparameters: fit.hyper.clone(),
        log_evidence: fit.log_evidence,
        fit: fit_summary(&fit, mode),
    };
    fs::write(&args.out, serde_json::to_string_pretty(&file)? + "\n")?;
    Ok(())
}

fn sibling(out: &Path, suffix: &str) -> std::path::PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}.csv"))
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let scenario: Scenario = match &args.scenario {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)?
        }
        None => Scenario::default(),
    };
    let methods = args
        .methods
        .iter()
        .map(|m| m.parse::<Method>().map_err(|e| CliError::Usage(e.to_string())))
        .collect::<CliResult<Vec<_>>>()?;
    if args.replicates == 0 {
        return Err(CliError::Usage("--replicates must be positive".into()));
    }
    let config = BenchConfig {
        prior_pjap: args.prior_pjap,
        ..BenchConfig::default()
    };
    let out = run_benchmark(&scenario, args.replicates, &methods, args.seed, &config)?;

    let mut w = csv::Writer::from_path(&args.out)?;
    w.write_record(["replicate", "dataset", "method", "statistic"])?;
    for r in &out.rows {
        w.write_record([
            r.replicate.to_string(),
            if r.alternative { "alternative" } else { "null" }.to_string(),
            r.method.to_string(),
            r.statistic.to_string(),
        ])?;
    }
    w.flush()?;
    let mut auc = csv::Writer::from_path(sibling(&args.out, "auc"))?;
    auc.write_record(["method", "auc"])?;
    let mut roc = csv::Writer::from_path(sibling(&args.out, "roc"))?;
    roc.write_record(["method", "fpr", "tpr"])?;
    for (method, curve) in &out.roc {
        auc.write_record([method.to_string(), curve.auc.to_string()])?;
        for (fpr, tpr) in &curve.points {
            roc.write_record([method.to_string(), fpr.to_string(), tpr.to_string()])?;
        }
        println!("{method}\tAUC {:.4}", curve.auc);
    }
    auc.flush()?;
    roc.flush()?;
    Ok(())
}

pub fn calibrate(args: &CalibrateArgs) -> CliResult<()> {
    let max_level = match (args.length, args.levels) {
        (Some(t), _) => TreeShape::for_length(t)?.max_level(),
        (None, Some(j)) => j,
        (None, None) => return Err(CliError::Usage("give --length or --levels".into())),
    };
    let eta = calibrate_sparsity(args.target, args.gamma_kappa, max_level)?;
    let out = serde_json::json!({
        "eta_kappa": eta,
        "gamma_kappa": args.gamma_kappa,
        "max_level": max_level,
        "prior_pjap": prior_pjap(eta, args.gamma_kappa, max_level)?,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}
