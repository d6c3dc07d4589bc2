use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use pathsel::graph_data::{load_dataset, load_expression, load_membership, load_network, Dataset, OutcomeKind};
use pathsel::inference::{
    chain_concordance, load_gene_conditionals, load_models, load_pathway_marginals, pathway_marginals,
    prediction_mse, selection_from_marginals, write_predictions, PosteriorSummary, Predictor,
};
use pathsel::mrf_sim::{linear_grid, phase_transition_scan};
use pathsel::sampler::chain::{bools_from, read_trace, write_trace_record, TRACE_HEADER};
use pathsel::sampler::{Chain, ChainStats, ChainTrace, Checkpoint, Model, RunSettings};
use pathsel::simgen::{
    censor_survival, generate, random_structure, select_truth, write_dataset, write_structure, write_truth, SimConfig,
    StructureConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::args::{FitArgs, PredictArgs, ReportArgs, ScanArgs, SimulateArgs};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    if a.n_samples < 2 {
        return Err(CliError::Config("--n-samples must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    rng.set_stream(1);
    let (membership, network) = match (&a.membership, &a.network) {
        (Some(m), Some(n)) => {
            let membership = load_membership(m)?;
            let network = load_network(n, &membership)?;
            (membership, network)
        }
        _ => {
            let cfg = StructureConfig {
                n_pathways: a.n_pathways,
                n_genes: a.n_genes,
                min_pathway_size: a.min_pathway_size,
                ..StructureConfig::default()
            };
            random_structure(&cfg, &mut rng)?
        }
    };
    let (true_pathways, true_genes) = select_truth(&membership, &network, a.true_pathways, &mut rng)?;
    let mut cfg = SimConfig::new(true_pathways, true_genes, a.n_samples, a.beta, a.seed);
    cfg.rho_sim = a.rho_sim;
    cfg.noise_sd = a.noise_sd;
    cfg.average_parents = a.average_parents;
    let sim = generate(&membership, &network, &cfg)?;

    create_dir(&a.out.out)?;
    write_structure(&a.out.out, &membership, &network)?;
    match a.censoring_rate {
        Some(rate) => {
            let mut crng = ChaCha8Rng::seed_from_u64(a.seed);
            crng.set_stream(2);
            let (d, times) = censor_survival(&sim, rate, &mut crng)?;
            write_dataset(&a.out.out, &membership, &d.sample_ids, &sim.raw_expression, &times, d.censoring.as_deref())?;
        }
        None => write_dataset(
            &a.out.out,
            &membership,
            &sim.dataset.sample_ids,
            &sim.raw_expression,
            sim.dataset.response.as_slice(),
            None,
        )?,
    }
    write_truth(a.out.out.join("truth.csv"), &membership, &sim.truth)?;
    println!(
        "simulated {} samples, {} pathways, {} genes; {} true pathways, {} true genes",
        a.n_samples,
        membership.n_pathways(),
        membership.n_genes(),
        sim.truth.pathways.len(),
        sim.truth.genes.len()
    );
    Ok(())
}

pub fn scan_eta(a: &ScanArgs) -> Result<()> {
    if !(a.eta_max > a.eta_min) || a.eta_min < 0.0 || a.grid_points < 2 {
        return Err(CliError::Config("need 0 <= --eta-min < --eta-max and at least 2 grid points".into()));
    }
    let membership = load_membership(&a.membership)?;
    let network = load_network(&a.network, &membership)?;
    let grid = linear_grid(a.eta_min, a.eta_max, a.grid_points);
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let scan = phase_transition_scan(&network, a.mu, &grid, a.sweeps, &mut rng)?;
    create_dir(&a.out.out)?;
    scan.write_csv(a.out.out.join("eta_scan.csv"))?;
    match scan.eta_pt_estimate {
        Some(e) => println!("eta_pt estimate: {e}"),
        None => println!("no phase transition detected on the grid"),
    }
    Ok(())
}

fn load_training(input: &crate::args::InputArgs) -> Result<(pathsel::graph_data::PathwayMembership, pathsel::graph_data::GeneNetwork, Dataset)> {
    let membership = load_membership(&input.membership)?;
    let network = load_network(&input.network, &membership)?;
    let data = load_dataset(&input.expression, &input.response, &membership, input.outcome)?;
    Ok((membership, network, data))
}

fn trace_path(dir: &Path, chain: usize) -> PathBuf {
    dir.join(format!("trace_chain{chain}.csv"))
}

fn checkpoint_path(dir: &Path, chain: usize) -> PathBuf {
    dir.join(format!("checkpoint_chain{chain}.txt"))
}

/// Keeps the header and the records up to `iteration`.
fn truncate_trace(path: &Path, iteration: usize) -> Result<()> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let file = fs::File::open(path).map_err(io)?;
    let mut kept = String::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io)?;
        let keep = i == 0
            || line
                .split(',')
                .next()
                .and_then(|f| f.parse::<usize>().ok())
                .is_some_and(|it| it <= iteration);
        if keep {
            kept.push_str(&line);
            kept.push('\n');
        }
    }
    write_file(path, &kept)
}

fn run_one_chain(model: Model<'_>, settings: &RunSettings, a: &FitArgs, index: usize) -> Result<ChainStats> {
    let dir = &a.out.out;
    let seed = a.seed.wrapping_add(index as u64);
    let tpath = trace_path(dir, index);
    let cpath = checkpoint_path(dir, index);
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", tpath.display()));
    let (mut chain, file) = if a.resume && cpath.exists() {
        let cp = Checkpoint::load(&cpath)?;
        if cp.seed != seed {
            return Err(CliError::Config(format!(
                "checkpoint {} was written with seed {}, expected {seed}",
                cpath.display(),
                cp.seed
            )));
        }
        truncate_trace(&tpath, cp.iteration)?;
        let chain = Chain::resume(model, settings.clone(), &cp)?;
        let file = fs::OpenOptions::new().append(true).open(&tpath).map_err(io)?;
        (chain, file)
    } else {
        let chain = Chain::new(model, settings.clone(), seed)?;
        let mut file = fs::File::create(&tpath).map_err(io)?;
        writeln!(file, "{TRACE_HEADER}").map_err(io)?;
        (chain, file)
    };
    let mut out = BufWriter::new(file);
    while chain.iteration() < settings.iterations {
        chain.step()?;
        let it = chain.iteration();
        if it % settings.thin == 0 {
            write_trace_record(&mut out, &chain.record()).map_err(io)?;
        }
        if a.checkpoint_every > 0 && it % a.checkpoint_every == 0 {
            out.flush().map_err(io)?;
            chain.checkpoint().save(&cpath)?;
        }
    }
    out.flush().map_err(io)?;
    if a.checkpoint_every > 0 {
        chain.checkpoint().save(&cpath)?;
    }
    let stats = chain.stats();
    log::info!(
        "chain {index}: move acceptance {:.3}, eta acceptance {:.3}, {} CFTP failures",
        stats.move_acceptance(),
        stats.eta_acceptance(),
        stats.cftp_failures
    );
    Ok(stats)
}

pub fn fit(a: &FitArgs) -> Result<()> {
    let (membership, network, data) = load_training(&a.input)?;
    let hp = a.hyper.resolve();
    hp.validate()?;
    if a.chains == 0 {
        return Err(CliError::Config("--chains must be at least 1".into()));
    }
    let settings = RunSettings {
        iterations: a.iterations,
        burn_in: a.burn_in,
        thin: a.thin,
        eta_every: a.eta_every,
        initial_eta: a.eta,
        edge_rule: a.edge_rule,
        ..RunSettings::default()
    };
    settings.validate(&hp)?;
    create_dir(&a.out.out)?;
    let model = Model {
        data: &data,
        membership: &membership,
        network: &network,
        hp: &hp,
        edge_rule: a.edge_rule,
    };
    let results: Vec<Result<ChainStats>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..a.chains)
            .map(|c| {
                let settings = &settings;
                s.spawn(move || run_one_chain(model, settings, a, c))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(CliError::Runtime("chain thread panicked".into()))))
            .collect()
    });
    let stats = results.into_iter().collect::<Result<Vec<_>>>()?;
    let traces = (0..a.chains)
        .map(|c| {
            read_trace(
                trace_path(&a.out.out, c),
                membership.n_pathways(),
                membership.n_genes(),
                a.burn_in,
                a.seed.wrapping_add(c as u64),
            )
        })
        .collect::<pathsel::Result<Vec<_>>>()?;
    summarize(
        &traces,
        &membership,
        a.pathway_threshold,
        a.gene_threshold,
        a.max_models,
        &a.out.out,
        Some(&stats),
    )
}

fn summarize(
    traces: &[ChainTrace],
    membership: &pathsel::graph_data::PathwayMembership,
    pathway_threshold: f64,
    gene_threshold: f64,
    max_models: usize,
    out: &Path,
    stats: Option<&[ChainStats]>,
) -> Result<()> {
    let pooled: Vec<_> = traces.iter().flat_map(|t| t.post_burn_in().iter().cloned()).collect();
    let summary = PosteriorSummary::from_records(&pooled, membership, pathway_threshold)?;
    summary.write_pathway_marginals(out.join("pathway_marginals.csv"), membership)?;
    summary.write_gene_conditionals(out.join("gene_conditionals.csv"), membership)?;
    summary.write_models(out.join("models.csv"), max_models)?;

    let mut text = String::new();
    let _ = writeln!(text, "records: {} post-burn-in over {} chain(s)", pooled.len(), traces.len());
    let per_chain = traces
        .iter()
        .map(|t| pathway_marginals(t.post_burn_in(), membership.n_pathways()))
        .collect::<pathsel::Result<Vec<_>>>()?;
    if traces.len() > 1 {
        let mut csv = String::from("pathway_id");
        for c in 0..traces.len() {
            let _ = write!(csv, ",chain{c}");
        }
        csv.push('\n');
        for (k, id) in membership.pathway_ids().iter().enumerate() {
            csv.push_str(id);
            for m in &per_chain {
                let _ = write!(csv, ",{}", m[k]);
            }
            csv.push('\n');
        }
        write_file(&out.join("chain_marginals.csv"), &csv)?;
        for a in 0..traces.len() {
            for b in a + 1..traces.len() {
                match chain_concordance(&per_chain[a], &per_chain[b])? {
                    Some(r) => {
                        let _ = writeln!(text, "concordance chain{a} chain{b}: {r:.4}");
                    }
                    None => {
                        let _ = writeln!(text, "concordance chain{a} chain{b}: undefined (constant marginals)");
                    }
                }
            }
        }
    }
    if let Some(stats) = stats {
        for (c, s) in stats.iter().enumerate() {
            let _ = writeln!(
                text,
                "chain{c}: move acceptance {:.4}, eta acceptance {:.4}, CFTP failures {}",
                s.move_acceptance(),
                s.eta_acceptance(),
                s.cftp_failures
            );
        }
    }
    let eta_mean = pooled.iter().map(|r| r.eta).sum::<f64>() / pooled.len() as f64;
    let _ = writeln!(text, "posterior mean eta: {eta_mean:.6}");
    let pw: Vec<&str> = summary
        .selected_pathways(pathway_threshold)
        .into_iter()
        .map(|k| membership.pathway_ids()[k].as_str())
        .collect();
    let genes: Vec<&str> = summary
        .selected_genes(gene_threshold)
        .into_iter()
        .map(|j| membership.gene_ids()[j].as_str())
        .collect();
    let _ = writeln!(text, "pathways >= {pathway_threshold}: {}", pw.join(" "));
    let _ = writeln!(text, "genes >= {gene_threshold}: {}", genes.join(" "));
    write_file(&out.join("summary.txt"), &text)?;
    print!("{text}");
    Ok(())
}

/// Reads `key=value` from a run_meta file.
fn meta_value(path: &Path, key: &str) -> Option<String> {
    let text = fs::read_to_string(path).ok()?;
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .filter_map(|l| l.split_once('='))
        .find(|(k, _)| k.trim() == key)
        .map(|(_, v)| v.trim().to_string())
}

pub fn report(a: &ReportArgs) -> Result<()> {
    let membership = load_membership(&a.membership)?;
    let burn_in = match a.burn_in {
        Some(b) => b,
        None => meta_value(&a.fit_dir.join("run_meta.txt"), "burn-in")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| CliError::Config("no --burn-in given and none recorded in the fit directory".into()))?,
    };
    let mut traces = Vec::new();
    for c in 0.. {
        let path = trace_path(&a.fit_dir, c);
        if !path.exists() {
            break;
        }
        traces.push(read_trace(&path, membership.n_pathways(), membership.n_genes(), burn_in, c as u64)?);
    }
    if traces.is_empty() {
        return Err(CliError::Io(format!("no trace_chain*.csv in {}", a.fit_dir.display())));
    }
    create_dir(&a.out.out)?;
    summarize(
        &traces,
        &membership,
        a.pathway_threshold,
        a.gene_threshold,
        a.max_models,
        &a.out.out,
        None,
    )
}

pub fn predict(a: &PredictArgs) -> Result<()> {
    let membership = load_membership(&a.input.membership)?;
    let data = load_dataset(&a.input.expression, &a.input.response, &membership, a.input.outcome)?;
    let hp = a.hyper.resolve();
    hp.validate()?;
    let (theta, gamma) = if a.top_model {
        let models = load_models(a.fit_dir.join("models.csv"), membership.n_pathways(), membership.n_genes())?;
        let top = models
            .first()
            .ok_or_else(|| CliError::Input("models.csv lists no models".into()))?;
        (bools_from(&top.theta), bools_from(&top.gamma))
    } else {
        let pw = load_pathway_marginals(a.fit_dir.join("pathway_marginals.csv"), &membership)?;
        let genes = load_gene_conditionals(a.fit_dir.join("gene_conditionals.csv"), &membership)?;
        selection_from_marginals(&membership, &pw, &genes, a.pathway_threshold, a.gene_threshold)
    };
    // Censored training times only bound the log-time from below, so the
    // predictor is fit on the observed events.
    let train = match &data.censoring {
        Some(events) => {
            let rows: Vec<usize> = (0..events.len()).filter(|&i| events[i]).collect();
            data.subset(&rows)
        }
        None => data,
    };
    let predictor = Predictor::fit(&train, &membership, &theta, &gamma, &hp)?;
    let test = match &a.test_response {
        Some(r) => load_dataset(&a.test_expression, r, &membership, a.input.outcome)?,
        None => {
            let (ids, raw) = load_expression(&a.test_expression, &membership)?;
            let n = ids.len();
            Dataset::new(ids, raw, DVector::zeros(n), None)?
        }
    }
    .recentered(&train.column_means);
    let y_hat = predictor.predict(&test);
    create_dir(&a.out.out)?;
    write_predictions(a.out.out.join("predictions.csv"), &test.sample_ids, &y_hat)?;
    let mut text = String::new();
    let pw: Vec<&str> = predictor.pathways.iter().map(|&k| membership.pathway_ids()[k].as_str()).collect();
    let _ = writeln!(text, "pathways: {}", pw.join(" "));
    let _ = writeln!(text, "genes: {}", gamma.iter().filter(|&&g| g).count());
    if a.test_response.is_some() {
        let mse = prediction_mse(&y_hat, &test.response, test.censoring.as_deref())?;
        let scale = if test.outcome == OutcomeKind::Survival {
            " (log time, observed events only)"
        } else {
            ""
        };
        let _ = writeln!(text, "mse{scale}: {mse}");
    }
    write_file(&a.out.out.join("prediction_summary.txt"), &text)?;
    print!("{text}");
    Ok(())
}
