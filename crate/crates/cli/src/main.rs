use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mldm::dataset::{self, write_arff};
use mldm::eval::{self, DatasetResults, EvaluationReport};
use mldm::metrics::ImbalanceProfile;
use mldm::{FoldSet, MultilabelDataset};
use serde_json::{json, Value};

mod config;

use config::{from_core, ConfigError, DataSource, DataSpec, Method, RunConfig, DEFAULT_FOLDS};

#[derive(Parser)]
#[command(name = "mldm", version, about = "Multilabel imbalance metrics, oversampling and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the imbalance profile of a dataset.
    Inspect {
        arff: PathBuf,
        xml: PathBuf,
        /// Also write the row as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Oversample a dataset and write the result as ARFF.
    Resample(ResampleArgs),
    /// Cross-validate MLkNN after each resampler and rank the resamplers.
    Evaluate(EvaluateArgs),
    /// Time each resampler on each dataset.
    Bench(BenchArgs),
}

#[derive(Args)]
struct Shared {
    /// Flat `key = value` file; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Percentage of new instances relative to the input size.
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
    /// Neighbours used by MLSMOTE.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    diffusion: DiffusionArgs,
}

#[derive(Args)]
#[command(next_help_heading = "Diffusion model")]
struct DiffusionArgs {
    /// Number of diffusion steps T.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    beta_start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta_end: Option<f64>,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    lr: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    momentum: Option<f64>,
}

#[derive(Args)]
struct ResampleArgs {
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[arg(long)]
    arff: Option<PathBuf>,
    #[arg(long)]
    xml: Option<PathBuf>,
    /// Output ARFF.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Dataset as `[name=]data.arff,labels.xml` or `[name=]tra{fold}.arff,tst{fold}.arff,labels.xml`.
    #[arg(long)]
    data: Vec<DataSpec>,
    #[arg(long, value_enum, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    /// Number of folds.
    #[arg(long)]
    folds: Option<usize>,
    /// Folds evaluated in parallel.
    #[arg(long)]
    jobs: Option<usize>,
    /// MLkNN neighbours.
    #[arg(long)]
    knn: Option<usize>,
    /// MLkNN Laplace smoothing.
    #[arg(long, allow_negative_numbers = true)]
    smoothing: Option<f64>,
    /// JSON report.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the text table here.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args)]
struct BenchArgs {
    /// Dataset as `[name=]data.arff,labels.xml`.
    #[arg(long)]
    data: Vec<DataSpec>,
    #[arg(long, value_enum, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    /// JSON report.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    shared: Shared,
}

enum Failure {
    /// Bad configuration or missing input; exit code 2.
    Usage(ConfigError),
    Run(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e)
    }
}

impl From<mldm::Error> for Failure {
    fn from(e: mldm::Error) -> Self {
        match e {
            mldm::Error::InvalidParameter { .. } => Failure::Usage(from_core(e)),
            other => Failure::Run(other.to_string()),
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

/// Files written by this run, removed again if a later step fails.
#[derive(Default)]
struct Outputs {
    written: Vec<PathBuf>,
}

impl Outputs {
    fn write(&mut self, path: &Path, contents: &str) -> Outcome {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let tmp = path.with_file_name(format!(".{name}.partial"));
        let result = fs::write(&tmp, contents).and_then(|_| fs::rename(&tmp, path));
        if let Err(e) = result {
            let _ = fs::remove_file(&tmp);
            return Err(Failure::Run(format!("cannot write {}: {e}", path.display())));
        }
        self.written.push(path.to_path_buf());
        Ok(())
    }

    fn discard(self) {
        for p in self.written {
            let _ = fs::remove_file(p);
        }
    }
}

impl Shared {
    fn apply(self, mut flags: RunConfig) -> Result<RunConfig, ConfigError> {
        let d = self.diffusion;
        flags.p = self.p;
        flags.k = self.k;
        flags.seed = self.seed;
        flags.steps = d.steps;
        flags.beta_start = d.beta_start;
        flags.beta_end = d.beta_end;
        flags.hidden = d.hidden;
        flags.epochs = d.epochs;
        flags.batch = d.batch;
        flags.lr = d.lr;
        flags.momentum = d.momentum;
        let file = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        Ok(file.overlay(flags))
    }
}

fn require<T: Clone>(v: &Option<T>, field: &str) -> Result<T, ConfigError> {
    v.clone().ok_or_else(|| ConfigError::new(field, "is required"))
}

fn check_input(path: &Path, field: &str) -> Result<(), ConfigError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("{} does not exist", path.display())))
    }
}

fn check_output(path: &Option<PathBuf>, field: &str) -> Result<(), ConfigError> {
    if let Some(p) = path {
        let parent = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return Err(ConfigError::new(field, format!("directory {} does not exist", parent.display())));
        }
    }
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn load(arff: &Path, xml: &Path, arff_field: &str, xml_field: &str) -> Outcome<MultilabelDataset> {
    check_input(arff, arff_field)?;
    check_input(xml, xml_field)?;
    dataset::load(arff, xml).map_err(|e| Failure::Run(format!("{}: {e}", arff.display())))
}

fn inspect(arff: &Path, xml: &Path, csv: Option<PathBuf>, out: &mut Outputs) -> Outcome {
    check_output(&csv, "csv")?;
    let ds = load(arff, xml, "arff", "xml")?;
    let p = ImbalanceProfile::compute(&ds)?;
    let name = stem(arff);
    let w = name.len().max(7);
    println!(
        "{:<w$}  {:>7}  {:>6}  {:>7}  {:>8}  {:>6}  {:>8}  {:>7}",
        "Dataset", "#Inst", "#Attr", "#Labels", "Card", "Dens", "MeanIR", "SCUMBLE"
    );
    println!(
        "{name:<w$}  {:>7}  {:>6}  {:>7}  {:>8.4}  {:>6.4}  {:>8.4}  {:>7.4}",
        p.instances, p.features, p.labels, p.card, p.dens, p.mean_ir, p.scumble
    );
    if let Some(path) = csv {
        let text = format!(
            "dataset,instances,attributes,labels,card,dens,meanir,scumble\n{name},{},{},{},{:.4},{:.4},{:.4},{:.4}\n",
            p.instances, p.features, p.labels, p.card, p.dens, p.mean_ir, p.scumble
        );
        out.write(&path, &text)?;
    }
    Ok(())
}

fn resample(args: ResampleArgs, out: &mut Outputs) -> Outcome {
    let flags = RunConfig {
        method: args.method,
        arff: args.arff,
        xml: args.xml,
        out: args.out,
        report: args.report,
        ..Default::default()
    };
    let cfg = args.shared.apply(flags)?;
    let method = require(&cfg.method, "method")?;
    let spec = cfg.spec(method)?;
    let arff = require(&cfg.arff, "arff")?;
    let xml = require(&cfg.xml, "xml")?;
    let target = require(&cfg.out, "out")?;
    check_output(&cfg.out, "out")?;
    check_output(&cfg.report, "report")?;

    let ds = load(&arff, &xml, "arff", "xml")?;
    let seed = cfg.seed();
    let (result, report) = spec.apply(&ds, seed)?;
    let added = report.output_size - report.input_size;

    println!("method    {}", report.algorithm);
    println!("input     {} instances", report.input_size);
    println!(
        "output    {} instances (+{added}: {} synthetic, {} split)",
        report.output_size, report.synthetic_count, report.split_count
    );
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
    println!("MeanIR    {} -> {} ({}%)", fmt(report.meanir_before), fmt(report.meanir_after), fmt(report.meanir_improvement));
    println!("fit       {:.4} s", report.fit_seconds);
    println!("generate  {:.4} s", report.generate_seconds);
    for note in &report.notes {
        println!("note      {note}");
    }
    if let Some(w) = &report.warning {
        eprintln!("warning: {w}");
    }

    out.write(&target, &write_arff(&result))?;
    if let Some(path) = &cfg.report {
        let Value::Object(mut map) = serde_json::to_value(&report).map_err(|e| Failure::Run(e.to_string()))? else {
            unreachable!("a report serializes to an object");
        };
        map.insert("schema".into(), json!(1));
        map.insert("input".into(), json!(arff.display().to_string()));
        map.insert("output".into(), json!(target.display().to_string()));
        map.insert("total_seconds".into(), json!(report.total_seconds()));
        if let mldm::resample::ResamplerSpec::Mldm { config, .. } = &spec {
            map.insert("diffusion".into(), serde_json::to_value(config).map_err(|e| Failure::Run(e.to_string()))?);
        }
        let text = serde_json::to_string_pretty(&Value::Object(map)).map_err(|e| Failure::Run(e.to_string()))?;
        out.write(path, &(text + "\n"))?;
    }
    Ok(())
}

/// Datasets from `--data`, falling back to `--arff`/`--xml` from a config file.
fn data_specs(cfg: &RunConfig) -> Result<Vec<DataSpec>, ConfigError> {
    if !cfg.data.is_empty() {
        return Ok(cfg.data.clone());
    }
    match (&cfg.arff, &cfg.xml) {
        (Some(arff), Some(xml)) => {
            Ok(vec![DataSpec { name: stem(xml), source: DataSource::Single(arff.clone()), xml: xml.clone() }])
        }
        _ => Err(ConfigError::new("data", "at least one dataset is required")),
    }
}

fn fold_path(pattern: &str, i: usize) -> PathBuf {
    PathBuf::from(pattern.replace("{fold}", &i.to_string()))
}

/// Check every input file before any work starts.
fn check_data(specs: &[DataSpec], folds: usize) -> Result<(), ConfigError> {
    for d in specs {
        check_input(&d.xml, "data")?;
        match &d.source {
            DataSource::Single(p) => check_input(p, "data")?,
            DataSource::Folds { train, test } => {
                for i in 1..=folds {
                    for pattern in [train, test] {
                        let p = fold_path(pattern, i);
                        if !p.is_file() {
                            return Err(ConfigError::new(
                                "data",
                                format!("missing fold {i} of `{}`: {} does not exist", d.name, p.display()),
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs, out: &mut Outputs) -> Outcome {
    let flags = RunConfig {
        data: args.data,
        methods: args.methods,
        folds: args.folds,
        jobs: args.jobs,
        knn: args.knn,
        smoothing: args.smoothing,
        out: args.out,
        table: args.table,
        csv: args.csv,
        ..Default::default()
    };
    let cfg = args.shared.apply(flags)?;
    let methods = cfg.method_list()?;
    let specs = methods.iter().map(|&m| cfg.spec(m)).collect::<Result<Vec<_>, _>>()?;
    let classifier = cfg.classifier()?;
    let data = data_specs(&cfg)?;
    let k = cfg.folds.unwrap_or(DEFAULT_FOLDS);
    if k < 2 {
        return Err(ConfigError::new("folds", "need at least 2 folds").into());
    }
    let jobs = cfg.jobs.unwrap_or(1);
    if jobs == 0 {
        return Err(ConfigError::new("jobs", "must be at least 1").into());
    }
    for (path, field) in [(&cfg.out, "out"), (&cfg.table, "table"), (&cfg.csv, "csv")] {
        check_output(path, field)?;
    }
    check_data(&data, k)?;

    let seed = cfg.seed();
    let mut datasets = Vec::with_capacity(data.len());
    for d in &data {
        let folds = match &d.source {
            DataSource::Single(arff) => {
                let ds = load(arff, &d.xml, "data", "data")?;
                FoldSet::k_fold(&ds, k, seed)?
            }
            DataSource::Folds { train, test } => FoldSet::load(train, test, &d.xml, k)
                .map_err(|e| Failure::Run(format!("{}: {e}", d.name)))?,
        };
        let mut results = Vec::with_capacity(specs.len());
        for spec in &specs {
            let r = eval::cross_validate(&folds, spec, classifier, seed, jobs)
                .map_err(|e| Failure::Run(format!("{} on {}: {e}", spec.name(), d.name)))?;
            eprintln!("{}: {} done", d.name, spec.name());
            results.push(r);
        }
        datasets.push(DatasetResults { dataset: d.name.clone(), results });
    }
    let report = EvaluationReport::new(seed, classifier, datasets)?;
    let table = report.to_table();
    print!("{table}");
    if let Some(path) = &cfg.out {
        let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Run(e.to_string()))?;
        out.write(path, &(text + "\n"))?;
    }
    if let Some(path) = &cfg.table {
        out.write(path, &table)?;
    }
    if let Some(path) = &cfg.csv {
        out.write(path, &report.to_csv())?;
    }
    Ok(())
}

struct Timing {
    dataset: String,
    method: &'static str,
    fit: f64,
    generate: f64,
    input_size: usize,
    output_size: usize,
}

fn timing_table(title: &str, runs: &[Timing], methods: &[&str], datasets: &[String], f: impl Fn(&Timing) -> f64) -> String {
    let name_w = methods.iter().map(|m| m.len()).max().unwrap_or(0).max(8);
    let col_w = datasets.iter().map(|d| d.len()).max().unwrap_or(0).max(10);
    let mut s = format!("{title}\n{:<name_w$}", "Method");
    for d in datasets {
        s.push_str(&format!("  {d:>col_w$}"));
    }
    s.push('\n');
    for m in methods {
        s.push_str(&format!("{m:<name_w$}"));
        for d in datasets {
            let t = runs.iter().find(|r| r.method == *m && &r.dataset == d).map(&f).unwrap_or(f64::NAN);
            s.push_str(&format!("  {t:>col_w$.4}"));
        }
        s.push('\n');
    }
    s
}

fn bench(args: BenchArgs, out: &mut Outputs) -> Outcome {
    let flags = RunConfig { data: args.data, methods: args.methods, out: args.out, csv: args.csv, ..Default::default() };
    let cfg = args.shared.apply(flags)?;
    let methods = cfg.method_list()?;
    let specs = methods.iter().map(|&m| cfg.spec(m)).collect::<Result<Vec<_>, _>>()?;
    let data = data_specs(&cfg)?;
    if data.iter().any(|d| matches!(d.source, DataSource::Folds { .. })) {
        return Err(ConfigError::new("data", "bench takes whole datasets (`arff,xml`), not fold patterns").into());
    }
    check_output(&cfg.out, "out")?;
    check_output(&cfg.csv, "csv")?;
    check_data(&data, 0)?;

    let seed = cfg.seed();
    let mut runs = Vec::new();
    for d in &data {
        let DataSource::Single(arff) = &d.source else { unreachable!() };
        let ds = load(arff, &d.xml, "data", "data")?;
        for spec in &specs {
            let (times, report) = eval::time_phases(spec, &ds, seed)
                .map_err(|e| Failure::Run(format!("{} on {}: {e}", spec.name(), d.name)))?;
            runs.push(Timing {
                dataset: d.name.clone(),
                method: spec.name(),
                fit: times.fit_seconds,
                generate: times.generate_seconds,
                input_size: report.input_size,
                output_size: report.output_size,
            });
        }
    }
    let names: Vec<&str> = specs.iter().map(|s| s.name()).collect();
    let sets: Vec<String> = data.iter().map(|d| d.name.clone()).collect();
    println!("{}", timing_table("Total seconds", &runs, &names, &sets, |t| t.fit + t.generate));
    println!("{}", timing_table("Fit seconds", &runs, &names, &sets, |t| t.fit));
    print!("{}", timing_table("Generate seconds", &runs, &names, &sets, |t| t.generate));

    if let Some(path) = &cfg.out {
        let rows: Vec<Value> = runs
            .iter()
            .map(|t| {
                json!({
                    "dataset": t.dataset,
                    "method": t.method,
                    "fit_seconds": t.fit,
                    "generate_seconds": t.generate,
                    "total_seconds": t.fit + t.generate,
                    "input_size": t.input_size,
                    "output_size": t.output_size,
                })
            })
            .collect();
        let doc = json!({ "schema": 1, "seed": seed, "methods": names, "datasets": sets, "runs": rows });
        let text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Run(e.to_string()))?;
        out.write(path, &(text + "\n"))?;
    }
    if let Some(path) = &cfg.csv {
        let mut text = String::from("dataset,method,fit_seconds,generate_seconds,total_seconds,input_size,output_size\n");
        for t in &runs {
            text.push_str(&format!(
                "{},{},{:.4},{:.4},{:.4},{},{}\n",
                t.dataset,
                t.method,
                t.fit,
                t.generate,
                t.fit + t.generate,
                t.input_size,
                t.output_size
            ));
        }
        out.write(path, &text)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = Outputs::default();
    let result = match cli.command {
        Command::Inspect { arff, xml, csv } => inspect(&arff, &xml, csv, &mut out),
        Command::Resample(a) => resample(a, &mut out),
        Command::Evaluate(a) => evaluate(a, &mut out),
        Command::Bench(a) => bench(a, &mut out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            out.discard();
            match failure {
                Failure::Usage(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
                Failure::Run(msg) => {
                    eprintln!("error: {msg}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
