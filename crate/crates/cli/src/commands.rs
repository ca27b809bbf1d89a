use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use epec::analysis::{
    mass_polarization_cells, presidential_winners_2008_2020, regional_metrics_from_curated,
    robustness_abstentions, robustness_aggregation, robustness_enp_subset, write_robustness_csv,
    MassPolarizationInput, RobustnessResult,
};
use epec::model::{AggregationLevel, PollingIdFormat};
use epec::pipeline::{curate_records, join_locations, AbstentionMode, TopN};
use epec::synth::apportion_integer_votes;
use epec::{
    build_matrix, comparison_report, export_regression_table, polarization_report, read_locations,
    read_results, robustness_pairs, robustness_top_n, sample_n_candidate, sample_three_candidate, sample_two_candidate,
    validate as validate_records, write_results, CurationConfig, EstebanRayParams, SwingClass, SynthError,
    SyntheticSpec,
};
use serde_json::{json, Value};

use crate::output::{OutputArgs, Precision, Run};
use crate::tables;
use crate::{
    Abstentions, ComputeArgs, CurationArgs, ExportArgs, MassArgs, RegionalArgs, RobustnessCommand, SwingArgs,
    SynthArgs, ValidateArgs,
};

fn top_n_str(t: TopN) -> String {
    match t {
        TopN::All => "all".into(),
        TopN::Count(n) => n.to_string(),
    }
}

fn curation_config(c: &CurationArgs) -> Result<CurationConfig> {
    let mut cfg = match &c.preset {
        Some(p) => CurationConfig::preset(p).with_context(|| format!("unknown preset `{p}`; expected us, chile or france"))?,
        None => CurationConfig::default(),
    };
    if let Some(t) = c.top_n {
        cfg.top_n = t;
    }
    cfg.abstention_mode = match c.abstentions {
        Abstentions::Exclude => AbstentionMode::Exclude,
        Abstentions::AsCandidates => AbstentionMode::AsCandidates,
    };
    cfg.aggregation_level = c.level;
    cfg.other_label = c.other_label.clone();
    cfg.format = PollingIdFormat { separator: c.separator };
    Ok(cfg)
}

fn curation_json(cfg: &CurationConfig) -> Value {
    json!({
        "level": cfg.aggregation_level.to_string(),
        "top_n": top_n_str(cfg.top_n),
        "abstentions": match cfg.abstention_mode {
            AbstentionMode::Exclude => "exclude",
            AbstentionMode::AsCandidates => "as-candidates",
        },
        "other_label": cfg.other_label,
        "separator": cfg.format.separator.to_string(),
    })
}

fn csv_writer(path: PathBuf) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn output_json(o: &OutputArgs) -> Value {
    let precision = match o.precision {
        Precision::Six => "6",
        Precision::Full => "full",
    };
    json!({ "precision": precision, "format": "csv" })
}

pub fn compute(argv: &[String], args: ComputeArgs) -> Result<PathBuf> {
    let cfg = curation_config(&args.curation)?;
    let alphas = args
        .alpha
        .iter()
        .map(|&a| EstebanRayParams::new(a))
        .collect::<Result<Vec<_>, _>>()?;
    let region_level = AggregationLevel::Prefix(args.region_level);
    let with_regions = region_level != cfg.aggregation_level && region_level.is_ancestor_of(cfg.aggregation_level);
    let config = json!({
        "curation": curation_json(&cfg),
        "region_level": args.region_level,
        "alpha": args.alpha,
        "output": output_json(&args.output),
    });
    let mut run = Run::new("compute", argv, config);
    run.input("results", &args.curation.input)?;
    if let Some(loc) = &args.location {
        run.input("location", loc)?;
    }

    let records = read_results(&args.curation.input)?;
    if let Some(loc) = &args.location {
        let join = join_locations(&records, &read_locations(loc)?, &cfg.format);
        if !join.unmatched.is_empty() {
            run.warn(format!(
                "{} polling ids have no location record (first: {})",
                join.unmatched.len(),
                join.unmatched[0]
            ));
        }
        if !join.inconsistent.is_empty() {
            run.warn(format!(
                "{} location records disagree with their polling id (first: {})",
                join.inconsistent.len(),
                join.inconsistent[0]
            ));
        }
    }
    let curated = curate_records(&records, &cfg)?;
    for w in &curated.warnings {
        run.warn(w.to_string());
    }
    let key = cfg.unit_key();
    let m = build_matrix(&curated.records, &key)?;
    let report = polarization_report(&m);
    let cmp = comparison_report(&m, &alphas);
    if !report.zero_vote_candidates.is_empty() {
        run.warn(format!("candidates without votes: {}", report.zero_vote_candidates.join(", ")));
    }
    if cmp.dispersion.is_none() {
        run.warn("dispersion needs at least two units with votes; column left empty");
    }

    run.open_dir(&args.output)?;
    let f = args.output.formatter();
    let er_cols: Vec<String> = args.alpha.iter().map(|a| format!("er_{a}")).collect();

    let mut w = csv_writer(run.path("national.csv"))?;
    let mut header = vec!["level", "n_units", "n_candidates", "total_votes", "coverage", "ep", "ec"];
    header.extend(er_cols.iter().map(String::as_str));
    header.extend(["dispersion", "margin_of_victory", "reynal_querol", "enp"]);
    w.write_record(&header)?;
    let mut row = vec![
        cfg.aggregation_level.to_string(),
        m.n_units().to_string(),
        m.n_candidates().to_string(),
        f(m.total_votes()),
        f(curated.coverage),
        f(report.ep),
        f(report.ec),
    ];
    row.extend(cmp.esteban_ray.iter().map(|e| f(e.aggregate)));
    row.push(cmp.dispersion.as_ref().map(|d| f(d.aggregate)).unwrap_or_default());
    row.extend([f(cmp.margin_of_victory), f(cmp.reynal_querol), f(cmp.enp)]);
    w.write_record(&row)?;
    w.flush()?;

    let mut w = csv_writer(run.path("candidates.csv"))?;
    let mut header = vec!["candidate", "kind", "votes", "share", "within", "between", "total"];
    header.extend(er_cols.iter().map(String::as_str));
    header.push("dispersion");
    w.write_record(&header)?;
    let pool_label = epec::model::normalize_label(&cfg.other_label);
    for (i, c) in report.per_candidate.iter().enumerate() {
        let kind = if curated.retained.contains(&c.candidate) {
            "candidate"
        } else if c.candidate == pool_label && !curated.pooled.is_empty() {
            "pool"
        } else {
            "pseudo"
        };
        let mut row = vec![
            c.candidate.clone(),
            kind.into(),
            f(m.candidate_total(i)),
            f(m.overall_share()[i]),
            f(c.within),
            f(c.between),
            f(c.total),
        ];
        row.extend(cmp.esteban_ray.iter().map(|e| f(e.per_candidate[i])));
        row.push(cmp.dispersion.as_ref().map(|d| f(d.per_candidate[i])).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;

    let with_regions = with_regions
        && curated
            .records
            .iter()
            .any(|r| cfg.format.depth(&r.polling_id) > args.region_level);
    if with_regions {
        let regions = regional_metrics_from_curated(&curated.records, &key, args.region_level)?;
        let mut active: BTreeMap<String, BTreeMap<&str, i64>> = BTreeMap::new();
        for r in &curated.records {
            let g = cfg.format.unit_key(&r.polling_id, region_level)?;
            *active.entry(g).or_default().entry(r.candidate.as_str()).or_default() += r.value;
        }
        let counts: BTreeMap<&String, usize> = active
            .iter()
            .map(|(g, c)| (g, c.values().filter(|&&v| v > 0).count()))
            .collect();
        let distinct: BTreeSet<usize> = counts.values().copied().collect();
        if distinct.len() > 1 {
            run.warn(format!(
                "regions differ in the number of candidates with votes ({distinct:?}); EP/EC use the national candidate list of {}",
                m.n_candidates()
            ));
        }
        let mut w = csv_writer(run.path("regions.csv"))?;
        w.write_record(["region", "n_units", "n_candidates", "active_candidates", "ep", "ec"])?;
        for (g, r) in &regions {
            w.write_record([
                g.clone(),
                r.n_units.to_string(),
                m.n_candidates().to_string(),
                counts.get(g).copied().unwrap_or(0).to_string(),
                f(r.ep),
                f(r.ec),
            ])?;
        }
        w.flush()?;
    }
    run.finish()
}

pub fn synth(argv: &[String], args: SynthArgs) -> Result<PathBuf> {
    let config = json!({
        "candidates": args.candidates,
        "mu": args.mu,
        "sigma": args.sigma,
        "units": args.units,
        "votes_per_unit": args.votes_per_unit,
        "output": output_json(&args.output),
    });
    let mut run = Run::new("synth", argv, config);
    run.seed(args.seed);
    let spec = SyntheticSpec::new(args.mu.clone(), args.sigma.clone(), args.units, args.seed)
        .with_votes_per_unit(args.votes_per_unit);
    let m = match args.candidates {
        2 => sample_two_candidate(&spec)?,
        3 => sample_three_candidate(&spec)?,
        n if n > 3 => sample_n_candidate(n, &spec)?,
        n => return Err(SynthError::InvalidSpec(format!("need at least 2 candidates, got {n}")).into()),
    };
    let records = apportion_integer_votes(&m)?.to_records()?;
    run.open_dir(&args.output)?;
    write_results(run.path("synthetic.csv.gz"), &records)?;
    run.finish()
}

fn write_results_tables(
    run: &mut Run,
    out: &OutputArgs,
    rows: &[(RobustnessResult, Option<(usize, f64)>)],
) -> Result<()> {
    let f = out.formatter();
    let file = File::create(run.path("robustness.csv"))?;
    write_robustness_csv(BufWriter::new(file), rows, f)?;
    let mut w = csv_writer(run.path("pairs.csv"))?;
    w.write_record(["protocol", "n", "region", "ep_a", "ep_b", "ec_a", "ec_b"])?;
    for (r, top) in rows {
        let n = top.map(|(n, _)| n.to_string()).unwrap_or_default();
        for p in &r.pairs {
            w.write_record([
                r.protocol.as_str().to_string(),
                n.clone(),
                p.region.clone(),
                f(p.a.ep),
                f(p.b.ep),
                f(p.a.ec),
                f(p.b.ec),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn regional_run(argv: &[String], protocol: &str, r: &RegionalArgs, extra: Value) -> Result<(Run, CurationConfig)> {
    let cfg = curation_config(&r.curation)?;
    let config = json!({
        "protocol": protocol,
        "curation": curation_json(&cfg),
        "region_level": r.region_level,
        "protocol_args": extra,
        "output": output_json(&r.output),
    });
    let mut run = Run::new("robustness", argv, config);
    run.input("results", &r.curation.input)?;
    Ok((run, cfg))
}

pub fn robustness(argv: &[String], cmd: RobustnessCommand) -> Result<PathBuf> {
    let (mut run, out, rows) = match cmd {
        RobustnessCommand::TopN { regional, max_n } => {
            let (run, cfg) = regional_run(argv, "TOP_N", &regional, json!({ "max_n": max_n }))?;
            let records = read_results(&regional.curation.input)?;
            let curve = robustness_top_n(&records, &cfg, regional.region_level, max_n)?;
            let rows = curve
                .into_iter()
                .map(|p| (p.result, Some((p.n, p.coverage))))
                .collect::<Vec<_>>();
            (run, regional.output, rows)
        }
        RobustnessCommand::Aggregation { regional, fine, coarse } => {
            let (run, cfg) = regional_run(
                argv,
                "AGGREGATION",
                &regional,
                json!({ "fine": fine.to_string(), "coarse": coarse.to_string() }),
            )?;
            let records = read_results(&regional.curation.input)?;
            let r = robustness_aggregation(&records, &cfg, regional.region_level, fine, coarse)?;
            (run, regional.output, vec![(r, None)])
        }
        RobustnessCommand::Abstentions { regional } => {
            let (run, cfg) = regional_run(argv, "ABSTENTIONS", &regional, json!({}))?;
            let records = read_results(&regional.curation.input)?;
            let r = robustness_abstentions(&records, &cfg, regional.region_level)?;
            (run, regional.output, vec![(r, None)])
        }
        RobustnessCommand::Enp { regional } => {
            let (run, cfg) = regional_run(argv, "ENP_SUBSET", &regional, json!({}))?;
            let records = read_results(&regional.curation.input)?;
            let (n, r) = robustness_enp_subset(&records, &cfg, regional.region_level)?;
            let coverage = curate_records(&records, &CurationConfig { top_n: TopN::Count(n), ..cfg })?.coverage;
            (run, regional.output, vec![(r, Some((n, coverage)))])
        }
        RobustnessCommand::Pairs { a, b, protocol, output } => {
            let config = json!({ "protocol": protocol.as_str(), "output": output_json(&output) });
            let mut run = Run::new("robustness", argv, config);
            run.input("a", &a)?;
            run.input("b", &b)?;
            let r = robustness_pairs(&tables::read_regional_metrics(&a)?, &tables::read_regional_metrics(&b)?, protocol)?;
            (run, output, vec![(r, None)])
        }
    };
    run.open_dir(&out)?;
    write_results_tables(&mut run, &out, &rows)?;
    run.finish()
}

pub fn classify_swing(argv: &[String], args: SwingArgs) -> Result<PathBuf> {
    let source = if args.winners.is_some() { "file" } else { "built-in 2008-2020 presidential winners" };
    let mut run = Run::new(
        "classify-swing",
        argv,
        json!({ "winners": source, "output": output_json(&args.output) }),
    );
    let table = match &args.winners {
        Some(p) => {
            run.input("winners", p)?;
            tables::read_winners(p)?
        }
        None => presidential_winners_2008_2020(),
    };
    let labels = epec::classify_swing(&table)?;
    run.open_dir(&args.output)?;
    let mut w = csv_writer(run.path("swing.csv"))?;
    w.write_record(["state", "winners", "class", "party"])?;
    for l in &labels {
        let (class, party) = match &l.label {
            SwingClass::Swing => ("SWING", String::new()),
            SwingClass::Partisan(p) => ("PARTISAN", p.clone()),
        };
        w.write_record([l.state.as_str(), &l.winners.join(";"), class, &party])?;
    }
    w.flush()?;
    run.finish()
}

pub fn mass_polarization(argv: &[String], args: MassArgs) -> Result<PathBuf> {
    let mut run = Run::new(
        "mass-polarization",
        argv,
        json!({ "weights": "normalized within party, region and year", "output": output_json(&args.output) }),
    );
    run.input("survey", &args.input)?;
    let (responses, dropped) = tables::read_survey(&args.input)?;
    if dropped > 0 {
        run.warn(format!("{dropped} responses without a party (independent or not sure) were dropped"));
    }
    let cells = mass_polarization_cells(&MassPolarizationInput { responses });
    run.open_dir(&args.output)?;
    let f = args.output.formatter();
    let mut w = csv_writer(run.path("mass_polarization.csv"))?;
    w.write_record(["region", "year", "ideology_dem", "ideology_rep", "pp"])?;
    let mut skipped = Vec::new();
    for ((region, year), res) in cells {
        match res {
            Ok(mp) => w.write_record([region, year.to_string(), f(mp.ideology_dem), f(mp.ideology_rep), f(mp.pp)])?,
            Err(e) => skipped.push(format!("({region}, {year}): {e}")),
        }
    }
    w.flush()?;
    for s in skipped {
        run.warn(format!("skipped cell {s}"));
    }
    run.finish()
}

pub fn export(argv: &[String], args: ExportArgs) -> Result<PathBuf> {
    let mut run = Run::new(
        "export",
        argv,
        json!({
            "columns": "region, year, ep_z, ec_z, covariates alphabetically",
            "standardization": "sample standard deviation",
            "output": output_json(&args.output),
        }),
    );
    run.input("metrics", &args.metrics)?;
    run.input("covariates", &args.covariates)?;
    let metrics = tables::read_panel_metrics(&args.metrics)?;
    let covariates = tables::read_covariates(&args.covariates)?;
    let table = export_regression_table(&metrics, &covariates)?;
    for (region, year) in &table.missing {
        run.warn(format!("no complete covariates for ({region}, {year}); row omitted"));
    }
    run.open_dir(&args.output)?;
    let file = File::create(run.path("regression.csv"))?;
    table.write_csv(BufWriter::new(file), args.output.formatter())?;
    if !table.missing.is_empty() {
        let mut w = csv_writer(run.path("missing.csv"))?;
        w.write_record(["region", "year"])?;
        for (region, year) in &table.missing {
            w.write_record([region.clone(), year.to_string()])?;
        }
        w.flush()?;
    }
    run.finish()
}

pub fn validate(argv: &[String], args: ValidateArgs) -> Result<PathBuf> {
    let mut run = Run::new("validate", argv, json!({ "output": output_json(&args.output) }));
    run.input("results", &args.input)?;
    let records = read_results(&args.input)?;
    let report = validate_records(&records);
    if !report.is_clean() {
        run.warn(format!("{} findings", report.len()));
    }
    run.open_dir(&args.output)?;
    let mut w = csv_writer(run.path("findings.csv"))?;
    w.write_record(["polling_id", "finding"])?;
    for finding in &report.findings {
        w.write_record([finding.polling_id(), &finding.to_string()])?;
    }
    w.flush()?;
    if records.is_empty() {
        bail!("{} holds no rows", args.input.display());
    }
    run.finish()
}
