use std::path::Path;

use monoculture::correlation::{agreement_matrix, random_error_baseline, rating_matrix, CorrelationMethod, MetricKind};
use monoculture::ingest::{
    load_metadata, load_ratings, load_responses, save_metadata, save_ratings, save_responses, Format, MetadataTable,
    RatingDataset, RatingScale, ResponseDataset,
};
use monoculture::judge::{group_maximal_judges, judge_report};
use monoculture::market::{
    exclusion_by_model_count, load_applicant_scores, run_ensemble_with, ApplicantPool, ApplicantPreferenceSource,
    BudgetRule, MarketConfig, MarketData, SweepPoint,
};
use monoculture::regression::{build_pair_table, build_rating_pair_table, ols_fit, CovariateSet, PairTable};
use monoculture::synthetic::{generate_ratings, generate_responses, SyntheticEnsembleSpec, SyntheticRatingSpec};
use monoculture::{svg, Execution};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::run::{read_toml, slug, to_value, Failure, OutFormat, Outcome, Run};
use crate::{Budget, Cli, Command, CorrelateArgs, DataArgs, JudgeArgs, MarketArgs, Method, Pool, RegressArgs, SynthArgs};

const EXEC: Execution = Execution::Parallel;

pub fn dispatch(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Synth(a) => synth(cli, a),
        Command::Correlate(a) => correlate(cli, a),
        Command::Regress(a) => regress(cli, a),
        Command::Judge(a) => judge(cli, a),
        Command::Market(a) => market(cli, a),
    }
}

fn dataset_format(f: OutFormat) -> (Format, &'static str) {
    match f {
        OutFormat::Csv => (Format::Csv, "csv"),
        OutFormat::Json => (Format::Jsonl, "jsonl"),
    }
}

// ---- synth -----------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthConfig {
    responses: Option<SyntheticEnsembleSpec>,
    ratings: Option<SyntheticRatingSpec>,
}

fn synth(cli: &Cli, args: &SynthArgs) -> Outcome {
    let mut cfg: SynthConfig = read_toml(&args.config)?;
    if cfg.responses.is_none() && cfg.ratings.is_none() {
        return Err(Failure::config(format!(
            "{}: needs a [responses] or [ratings] table",
            args.config.display()
        )));
    }
    if let Some(seed) = cli.seed {
        if let Some(r) = &mut cfg.responses {
            r.seed = seed;
        }
        if let Some(r) = &mut cfg.ratings {
            r.seed = seed;
        }
    }
    let seed = cfg
        .responses
        .as_ref()
        .map(|r| r.seed)
        .or(cfg.ratings.as_ref().map(|r| r.seed))
        .unwrap_or(0);
    let mut run = Run::new("synth", &cli.out, cli.format, seed)?;
    run.input("config", &args.config)?;
    let (format, ext) = dataset_format(cli.format);

    if let Some(spec) = &cfg.responses {
        let d = generate_responses(spec)?;
        let (a, k) = (format!("answers.{ext}"), format!("key.{ext}"));
        save_responses(&d, &run.path(&a), &run.path(&k), format)?;
        run.wrote(&a);
        run.wrote(&k);
        save_metadata(&spec.metadata()?, &run.path("metadata.csv"))?;
        run.wrote("metadata.csv");
        println!("responses: {} models x {} items", d.num_models(), d.num_items());
    }
    if let Some(spec) = &cfg.ratings {
        let r = generate_ratings(spec)?;
        let name = format!("ratings.{ext}");
        let human = format!("human.{ext}");
        let labeled = r.has_human_labels();
        save_ratings(&r, &run.path(&name), labeled.then(|| run.path(&human)).as_deref(), format)?;
        run.wrote(&name);
        if labeled {
            run.wrote(&human);
        }
        save_metadata(&spec.metadata()?, &run.path("rating_metadata.csv"))?;
        run.wrote("rating_metadata.csv");
        println!(
            "ratings: {} models x {} pairs, {} labeled",
            r.num_models(),
            r.num_pairs(),
            r.labeled_count()
        );
    }
    run.finish(&to_value(&cfg))
}

// ---- shared data loading ---------------------------------------------------

enum Data {
    Responses(ResponseDataset),
    Ratings(RatingDataset),
}

fn load_data(run: &mut Run, sub: &'static str, args: &DataArgs) -> Outcome<Data> {
    match (&args.answers, &args.key, &args.ratings) {
        (Some(a), Some(k), None) => {
            run.input("answers", a)?;
            run.input("key", k)?;
            Ok(Data::Responses(load_responses(a, k, Format::from_path(a))?))
        }
        (None, None, Some(r)) => {
            run.input("ratings", r)?;
            if let Some(h) = &args.human {
                run.input("human", h)?;
            }
            let scale = RatingScale {
                min: args.scale_min,
                max: args.scale_max,
            };
            Ok(Data::Ratings(load_ratings(r, args.human.as_deref(), Format::from_path(r), scale)?))
        }
        _ => Err(Failure::usage(sub, "give either --answers and --key, or --ratings")),
    }
}

fn method(m: Method) -> CorrelationMethod {
    match m {
        Method::Pearson => CorrelationMethod::Pearson,
        Method::Spearman => CorrelationMethod::Spearman,
    }
}

fn default_metrics(data: &Data, requested: &[MetricKind]) -> Vec<MetricKind> {
    if !requested.is_empty() {
        return requested.to_vec();
    }
    match data {
        Data::Responses(_) => MetricKind::RESPONSE_KINDS.to_vec(),
        Data::Ratings(r) if r.has_human_labels() => MetricKind::RATING_KINDS.to_vec(),
        Data::Ratings(_) => vec![MetricKind::RatingCorrelation],
    }
}

fn check_metrics(sub: &'static str, data: &Data, metrics: &[MetricKind]) -> Outcome {
    let responses = matches!(data, Data::Responses(_));
    for m in metrics {
        if m.is_agreement() != responses {
            let needs = if m.is_agreement() { "--answers/--key" } else { "--ratings" };
            return Err(Failure::usage(sub, format!("metric {} needs {needs}", m.name())));
        }
    }
    Ok(())
}

fn load_meta(run: &mut Run, path: &Path, ids: &[String]) -> Outcome<MetadataTable> {
    run.input("metadata", path)?;
    let mut meta = load_metadata(path)?;
    for w in meta.cross_reference(&[ids]) {
        log::warn!("{w}");
    }
    Ok(meta)
}

// ---- correlate -------------------------------------------------------------

fn correlate(cli: &Cli, args: &CorrelateArgs) -> Outcome {
    let mut run = Run::new("correlate", &cli.out, cli.format, cli.seed.unwrap_or(0))?;
    let data = load_data(&mut run, "correlate", &args.data)?;
    let metrics = default_metrics(&data, &args.metric);
    check_metrics("correlate", &data, &metrics)?;

    let mut summary = String::from("metric,pairs,undefined_pairs,mean,random_baseline\n");
    for &kind in &metrics {
        let (m, baseline) = match &data {
            Data::Responses(d) => {
                let base = (kind == MetricKind::AgreementBothWrong).then(|| random_error_baseline(d));
                (agreement_matrix(d, kind, EXEC)?, base)
            }
            Data::Ratings(r) => (rating_matrix(r, kind, method(args.method), EXEC)?, Some(0.0)),
        };
        let short = kind.short_name();
        run.write(&format!("matrix_{short}.csv"), &m.to_csv())?;
        run.write(&format!("heatmap_{short}.svg"), &svg::heatmap(kind.description(), &m.model_ids, &m.values))?;
        run.write_json(&format!("matrix_{short}.json"), &m)?;
        let cells = m.off_diagonal();
        let mean = (!cells.is_empty()).then(|| cells.iter().sum::<f64>() / cells.len() as f64);
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        summary.push_str(&format!(
            "{},{},{},{},{}\n",
            kind.name(),
            m.len() * (m.len() - 1) / 2,
            m.undefined_pairs(),
            opt(mean),
            opt(baseline)
        ));
        println!(
            "{}: mean {} over {} pairs ({} undefined){}",
            kind.name(),
            opt(mean),
            cells.len(),
            m.undefined_pairs(),
            baseline.map(|b| format!(", random baseline {b}")).unwrap_or_default()
        );
    }
    run.write("summary.csv", &summary)?;
    run.finish(&json!({
        "data": args.data,
        "metrics": metrics.iter().map(|m| m.name()).collect::<Vec<_>>(),
        "method": args.method,
    }))
}

// ---- regress ---------------------------------------------------------------

fn pair_table_csv(t: &PairTable) -> String {
    let mut out = String::from("model_1,model_2,dependent");
    for term in &t.terms {
        out.push(',');
        out.push_str(term.label());
    }
    out.push('\n');
    for r in &t.rows {
        out.push_str(&format!("{},{},{}", csv_field(&r.model_1), csv_field(&r.model_2), r.dependent));
        for &term in &t.terms {
            out.push(',');
            if let Some(v) = r.value(term) {
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn regress(cli: &Cli, args: &RegressArgs) -> Outcome {
    let seed = cli.seed.unwrap_or(0);
    let mut run = Run::new("regress", &cli.out, cli.format, seed)?;
    let data = load_data(&mut run, "regress", &args.data)?;
    let ids = match &data {
        Data::Responses(d) => d.model_ids().to_vec(),
        Data::Ratings(r) => r.model_ids().to_vec(),
    };
    let meta = load_meta(&mut run, &args.meta, &ids)?;
    let metrics = default_metrics(&data, &args.metric);
    check_metrics("regress", &data, &metrics)?;
    let covariates = args.covariates.unwrap_or(match data {
        Data::Responses(_) => CovariateSet::Hf,
        Data::Ratings(_) => CovariateSet::Resumes,
    });
    let terms = covariates.terms();

    for &kind in &metrics {
        let table = match &data {
            Data::Responses(d) => build_pair_table(d, &meta, kind, &terms, seed, EXEC)?,
            Data::Ratings(r) => build_rating_pair_table(r, &meta, kind, method(args.method), &terms, seed, EXEC)?,
        };
        let fit = ols_fit(&table, &terms)?;
        let short = kind.short_name();
        run.write(&format!("pairs_{short}.csv"), &pair_table_csv(&table))?;
        run.write(&format!("regression_{short}.csv"), &fit.to_csv())?;
        let report = format!(
            "{}Pairs dropped: {} undefined metric, {} missing covariate.\n",
            fit.to_table(),
            table.dropped_undefined,
            table.dropped_missing_covariate
        );
        run.write(&format!("regression_{short}.txt"), &report)?;
        run.write_json(&format!("regression_{short}.json"), &fit)?;
        println!("{report}");
    }
    run.finish(&json!({
        "data": args.data,
        "metrics": metrics.iter().map(|m| m.name()).collect::<Vec<_>>(),
        "covariates": covariates,
        "method": args.method,
    }))
}

// ---- judge -----------------------------------------------------------------

fn judge(cli: &Cli, args: &JudgeArgs) -> Outcome {
    let mut run = Run::new("judge", &cli.out, cli.format, cli.seed.unwrap_or(0))?;
    run.input("answers", &args.answers)?;
    run.input("key", &args.key)?;
    let d = load_responses(&args.answers, &args.key, Format::from_path(&args.answers))?;
    let meta = load_meta(&mut run, &args.meta, d.model_ids())?;
    let judges = if args.judge.is_empty() {
        group_maximal_judges(&d, &meta, args.grouping)
    } else {
        args.judge.clone()
    };
    if judges.is_empty() {
        return Err(Failure::data("no judge: metadata assigns no model to a group"));
    }
    let mut summary = String::from("judge_id,judge_accuracy,judge_missing,mean_inflation_same_group,mean_inflation_other\n");
    for j in &judges {
        let rep = judge_report(&d, &meta, j, args.grouping, EXEC)?;
        let name = slug(j);
        run.write(&format!("judge_{name}.csv"), &rep.to_csv())?;
        let points: Vec<(f64, f64, bool)> = rep.rows.iter().map(|r| (r.true_accuracy, r.inflation, r.same_group)).collect();
        run.write(
            &format!("judge_{name}.svg"),
            &svg::scatter(
                &format!("Judge: {j}"),
                "true accuracy",
                "judged - true accuracy",
                &points,
                Some(rep.judge_accuracy),
                ("same group as judge", "other"),
            ),
        )?;
        run.write_json(&format!("judge_{name}.json"), &rep)?;
        let mean = |same: bool| {
            let v: Vec<f64> = rep
                .rows
                .iter()
                .filter(|r| r.same_group == same && r.model_id != *j)
                .map(|r| r.inflation)
                .collect();
            if v.is_empty() {
                String::new()
            } else {
                (v.iter().sum::<f64>() / v.len() as f64).to_string()
            }
        };
        summary.push_str(&format!(
            "{},{},{},{},{}\n",
            csv_field(j),
            rep.judge_accuracy,
            rep.judge_missing,
            mean(true),
            mean(false)
        ));
    }
    print!("{summary}");
    run.write("judges.csv", &summary)?;
    run.finish(&json!({
        "answers": args.answers,
        "key": args.key,
        "meta": args.meta,
        "judges": judges,
        "grouping": args.grouping,
    }))
}

// ---- market ----------------------------------------------------------------

fn market_config(cli: &Cli, args: &MarketArgs) -> Outcome<MarketConfig> {
    let mut cfg = match &args.config {
        Some(p) => read_toml::<MarketConfig>(p)?,
        None => match (args.method, args.firms) {
            (Some(m), Some(f)) => MarketConfig::new(m, f),
            _ => return Err(Failure::usage("market", "give --config, or both --method and --firms")),
        },
    };
    if let Some(m) = args.method {
        cfg.method = m;
    }
    if let Some(f) = args.firms {
        cfg.firms = f;
    }
    if let Some(p) = args.p {
        cfg.interview_fraction = p;
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    if let Some(a) = args.applicants {
        cfg.applicants = Some(a);
    }
    if let Some(c) = args.capacity {
        cfg.capacity = c;
    }
    if let Some(b) = args.budget {
        cfg.budget = match b {
            Budget::All => BudgetRule::AllFirms,
            Budget::Uniform => BudgetRule::Uniform1ToF,
        };
    }
    if let Some(p) = args.pool {
        cfg.pool = match p {
            Pool::All => ApplicantPool::All,
            Pool::Labeled => ApplicantPool::Labeled,
        };
    }
    if let Some(j) = &args.job {
        cfg.job = Some(j.clone());
    }
    if let Some(m) = &args.models {
        cfg.models = Some(m.clone());
    }
    if args.applicant_scores.is_some() {
        cfg.applicant_preferences = ApplicantPreferenceSource::RatingFile;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    // without ratings the pool is generated; default to 60 applicants
    if args.ratings.is_none() && cfg.applicants.is_none() {
        cfg.applicants = Some(60);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn market(cli: &Cli, args: &MarketArgs) -> Outcome {
    let cfg = market_config(cli, args)?;
    let mut run = Run::new("market", &cli.out, cli.format, cfg.seed)?;
    if let Some(p) = &args.config {
        run.input("config", p)?;
    }
    let scale = RatingScale {
        min: args.scale_min,
        max: args.scale_max,
    };
    let ratings = match &args.ratings {
        Some(r) => {
            run.input("ratings", r)?;
            if let Some(h) = &args.human {
                run.input("human", h)?;
            }
            Some(load_ratings(r, args.human.as_deref(), Format::from_path(r), scale)?)
        }
        None => None,
    };
    let meta = match &args.meta {
        Some(m) => {
            let ids = ratings.as_ref().map(|r| r.model_ids().to_vec()).unwrap_or_default();
            Some(load_meta(&mut run, m, &ids)?)
        }
        None => None,
    };
    let scores = match &args.applicant_scores {
        Some(p) => {
            run.input("applicant_scores", p)?;
            Some(load_applicant_scores(p)?)
        }
        None => None,
    };
    let data = MarketData {
        ratings: ratings.as_ref(),
        meta: meta.as_ref(),
        applicant_scores: scores.as_ref(),
    };

    let res = run_ensemble_with(&cfg, data, EXEC)?;
    run.write("market_summary.csv", &res.summary_csv())?;
    run.write("market_replicates.csv", &res.replicates_csv())?;
    run.write("market_budget.csv", &res.budget_csv())?;
    if !res.buckets.is_empty() {
        run.write("market_buckets.csv", &res.buckets_csv())?;
        let xs: Vec<f64> = res.buckets.iter().map(|b| b.lower as f64).collect();
        let ys = res.buckets.iter().map(|b| b.probability).collect();
        run.write(
            "market_buckets.svg",
            &svg::lines(
                "Match probability by human rating",
                "human rating bucket",
                "P(match)",
                &xs,
                &[(cfg.method.name().to_string(), ys)],
            ),
        )?;
    }
    if cfg.budget == BudgetRule::Uniform1ToF {
        let xs: Vec<f64> = res.budget.iter().map(|b| b.t as f64).collect();
        let ys = res.budget.iter().map(|b| b.p_relative).collect();
        run.write(
            "market_budget.svg",
            &svg::lines(
                "Relative match probability",
                "applications",
                "P(match | t) / P(match | 1)",
                &xs,
                &[(cfg.method.name().to_string(), ys)],
            ),
        )?;
    }
    run.write_json("market.json", &res)?;

    println!(
        "{} firms={} applicants={} replicates={}",
        cfg.method.name(),
        cfg.firms,
        res.applicants,
        res.replicates
    );
    println!("systemic exclusion: {} (se {})", res.exclusion.mean, res.exclusion.se);
    match res.avg_rank {
        Some(r) => println!("average applicant rank: {} (se {})", r.mean, r.se),
        None => println!("average applicant rank: undefined (no matches)"),
    }
    println!("match rate: {} (se {})", res.match_rate.mean, res.match_rate.se);

    let mut sweep = serde_json::Value::Null;
    if let Some(n) = args.sweep {
        let points = exclusion_by_model_count(&cfg, data, n, args.sweep_combinations, args.sweep_replicates, EXEC)?;
        run.write("exclusion_by_models.csv", &SweepPoint::to_csv(&points))?;
        let xs: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
        let series = vec![
            ("distinct models".to_string(), points.iter().map(|p| Some(p.model_exclusion.mean)).collect()),
            ("uniformly random".to_string(), points.iter().map(|p| Some(p.uniform_exclusion.mean)).collect()),
            ("independent expectation".to_string(), points.iter().map(|p| Some(p.uniform_expected)).collect()),
        ];
        run.write(
            "exclusion_by_models.svg",
            &svg::lines("Systemic exclusion by number of models", "models", "exclusion rate", &xs, &series),
        )?;
        run.write_json("exclusion_by_models.json", &points)?;
        sweep = json!({
            "max_models": n,
            "combinations": args.sweep_combinations,
            "replicates_per_combination": args.sweep_replicates,
        });
    }
    run.finish(&json!({
        "market": to_value(&cfg),
        "sweep": sweep,
        "scale": scale,
    }))
}
