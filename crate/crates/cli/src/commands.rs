use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use acnf::evaluators::oracle::{bundled_dataset, bundled_space, LoadWarning, OracleDataset};
use acnf::evaluators::protocol::LabelMap;
use acnf::{
    emit_report, AlphaMode, ConfigError, Evaluation, Evaluator, EvaluatorError, EvaluatorSource,
    ExternalEvaluator, LandscapeSpec, PersistError, ReportFormat, RunState, Search, SearchConfig,
    SearchError, SearchSpace, Status, SyntheticLandscape, TableOracle, Termination, UpdatePolicy,
};

use crate::{
    AlphaModeArg, ConfigFlags, EvaluatorArg, EvaluatorFlags, FormatArg, PolicyArg, ProtocolArgs, ResumeArgs,
    SearchArgs, ValidateArgs,
};

const DEFAULT_TIMEOUT_S: f64 = 60.0;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn input(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }

    fn evaluator(message: impl Into<String>) -> Self {
        Failure { code: 4, message: message.into() }
    }

    fn degenerate(message: impl Into<String>) -> Self {
        Failure { code: 5, message: message.into() }
    }
}

type CmdResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CmdResult {
    std::fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn config_flag(error: &ConfigError) -> &'static str {
    match error {
        ConfigError::Iterations(_) => "--iterations",
        ConfigError::Alpha(_) => "--alpha",
        ConfigError::Clamp(..) => "--clamp-min/--clamp-max",
        ConfigError::FailureFactor(_) => "--failure-factor",
        ConfigError::Floor(_) => "--floor",
    }
}

fn build_config(flags: &ConfigFlags) -> Result<SearchConfig, Failure> {
    let mut config = match &flags.config {
        Some(path) => {
            let text = read(path)?;
            serde_json::from_str::<SearchConfig>(&text)
                .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?
        }
        None => SearchConfig::default(),
    };
    if let Some(k) = flags.iterations {
        config.k = k;
    }
    if let Some(seed) = flags.seed {
        config.seed = seed;
    }
    match (flags.alpha_mode, flags.alpha) {
        (Some(AlphaModeArg::Median), Some(_)) => {
            return Err(Failure::config("--alpha only applies to --alpha-mode fixed"))
        }
        (Some(AlphaModeArg::Median), None) => config.alpha_mode = AlphaMode::RunningMedian,
        (Some(AlphaModeArg::Fixed), None) => match config.alpha_mode {
            AlphaMode::Fixed(_) => {}
            AlphaMode::RunningMedian => {
                return Err(Failure::config("--alpha-mode fixed needs --alpha (alpha must be > 0)"))
            }
        },
        (_, Some(alpha)) => config.alpha_mode = AlphaMode::Fixed(alpha),
        (None, None) => {}
    }
    if let Some(policy) = flags.update_policy {
        config.update_policy = match policy {
            PolicyArg::Once => UpdatePolicy::Once,
            PolicyArg::PerPair => UpdatePolicy::PerPair,
        };
    }
    if let Some(v) = flags.clamp_min {
        config.gamma_min = v;
    }
    if let Some(v) = flags.clamp_max {
        config.gamma_max = v;
    }
    if let Some(v) = flags.failure_factor {
        config.failure_factor = v;
    }
    if let Some(v) = flags.floor {
        config.exclusion_floor = v;
    }
    if flags.no_cache {
        config.cache_evaluations = false;
    }
    config.validate().map_err(|e| Failure::config(format!("{}: {e}", config_flag(&e))))?;
    Ok(config)
}

fn print_warnings(source: &str, warnings: &[LoadWarning]) {
    for w in warnings {
        eprintln!("warning: {source}: {w}");
    }
}

fn load_space(path: &Path) -> Result<SearchSpace, Failure> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_dataset(path: &Path) -> Result<OracleDataset, Failure> {
    let text = read(path)?;
    let (dataset, warnings) =
        OracleDataset::parse(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    print_warnings(&path.display().to_string(), &warnings);
    Ok(dataset)
}

/// Oracle over `path` (or the bundled table) and the space it runs on.
fn oracle_setup(
    path: Option<&Path>,
    space: Option<SearchSpace>,
    input_size: u32,
) -> Result<(TableOracle, SearchSpace), Failure> {
    let (dataset, name) = match path {
        Some(p) => (load_dataset(p)?, p.display().to_string()),
        None => (bundled_dataset(), "bundled table".to_string()),
    };
    let filtered = dataset.filtered(input_size);
    if filtered.rows.is_empty() {
        return Err(Failure::input(format!("{name}: no rows at input size {input_size}")));
    }
    let space = match space {
        Some(space) => space,
        None if path.is_none() => bundled_space(),
        None => filtered.infer_space().map_err(|e| Failure::input(format!("{name}: {e}")))?,
    };
    let oracle = TableOracle::new(&filtered, input_size);
    oracle.check_space(&space).map_err(|e| Failure::input(format!("{name}: {e}")))?;
    Ok((oracle, space))
}

fn synthetic_setup(spec: LandscapeSpec, seed: u64) -> Result<SyntheticLandscape, Failure> {
    SyntheticLandscape::new(spec, seed).map_err(|e| Failure::config(format!("--landscape: {e}")))
}

fn external_setup(
    command: &str,
    args: &[String],
    timeout_s: f64,
    input_size: u32,
) -> Result<ExternalEvaluator, Failure> {
    if !(timeout_s.is_finite() && timeout_s > 0.0) {
        return Err(Failure::config(format!("--timeout-s must be > 0, got {timeout_s}")));
    }
    ExternalEvaluator::spawn(command, args, Duration::from_secs_f64(timeout_s), input_size)
        .map_err(|e| Failure::evaluator(e.to_string()))
}

fn report_format(path: &Path, format: Option<FormatArg>) -> ReportFormat {
    match format {
        Some(FormatArg::Csv) => ReportFormat::Csv,
        Some(FormatArg::Markdown) => ReportFormat::Markdown,
        None if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => ReportFormat::Csv,
        None => ReportFormat::Markdown,
    }
}

fn selected_evaluator(flags: &EvaluatorFlags) -> Result<EvaluatorArg, Failure> {
    let implied = match (&flags.external_cmd, &flags.landscape) {
        (Some(_), Some(_)) => {
            return Err(Failure::config("--external-cmd and --landscape select different evaluators"))
        }
        (Some(_), None) => Some(EvaluatorArg::External),
        (None, Some(_)) => Some(EvaluatorArg::Synthetic),
        (None, None) => None,
    };
    let chosen = match (flags.evaluator, implied) {
        (Some(e), Some(i)) if e != i => {
            return Err(Failure::config(format!(
                "--evaluator {} conflicts with the {} options given",
                evaluator_name(e),
                evaluator_name(i)
            )))
        }
        (Some(e), _) => e,
        (None, Some(i)) => i,
        (None, None) => EvaluatorArg::Oracle,
    };
    if chosen != EvaluatorArg::Oracle && flags.oracle.is_some() {
        return Err(Failure::config(format!(
            "--oracle conflicts with --evaluator {}",
            evaluator_name(chosen)
        )));
    }
    if chosen != EvaluatorArg::External && (!flags.external_args.is_empty() || flags.timeout_s.is_some()) {
        return Err(Failure::config("--external-arg and --timeout-s need --evaluator external"));
    }
    if chosen == EvaluatorArg::External && flags.external_cmd.is_none() {
        return Err(Failure::config("--evaluator external needs --external-cmd"));
    }
    Ok(chosen)
}

fn evaluator_name(e: EvaluatorArg) -> &'static str {
    match e {
        EvaluatorArg::Oracle => "oracle",
        EvaluatorArg::Synthetic => "synthetic",
        EvaluatorArg::External => "external",
    }
}

/// Steps the search, then writes outputs. An evaluator failure still saves
/// the run state so far.
fn drive(
    mut search: Search,
    evaluator: &mut dyn Evaluator,
    source: Option<EvaluatorSource>,
    stop_after: Option<u64>,
    out: Option<&Path>,
    report: Option<(&Path, ReportFormat)>,
) -> CmdResult {
    let result = match stop_after {
        Some(n) => search.run_for(evaluator, n).map(|_| ()),
        None => search.run(evaluator).map(|_| ()),
    };
    if let Some(path) = out {
        write(path, &RunState::capture(&search, source).to_json())?;
    }
    if let Err(e) = result {
        return Err(match e {
            SearchError::Evaluator { .. } => Failure::evaluator(e.to_string()),
            SearchError::Config(_) => Failure::config(e.to_string()),
            _ => Failure::input(e.to_string()),
        });
    }
    if let Some((path, format)) = report {
        write(path, &emit_report(search.table(), search.state(), format))?;
    }
    print!("{}", summary(&search));
    if search.termination() == Some(Termination::Exhausted) {
        return Err(Failure::degenerate("every combination was excluded before the budget ran out"));
    }
    if search.degenerate_updates() > 0 {
        return Err(Failure::degenerate(format!(
            "{} update(s) left a single active combination",
            search.degenerate_updates()
        )));
    }
    Ok(())
}

fn summary(search: &Search) -> String {
    let space = search.space();
    let table = search.table();
    let mut out = String::new();
    let status = match search.termination() {
        Some(t) => t.to_string(),
        None => "stopped".to_string(),
    };
    let _ = writeln!(
        out,
        "{status} after {} of {} iterations; {} combinations evaluated, {} active",
        search.iterations_done(),
        search.config().k,
        table.len(),
        search.state().active_count()
    );
    let labels = |r: &acnf::ResultRecord| format!("({})", r.labels.join(", "));
    match table.best_by_m() {
        Ok(best) => {
            let _ = writeln!(
                out,
                "best by m: {}  accuracy {}  time {} s  m {:.4}",
                labels(best),
                best.accuracy.unwrap_or_default(),
                best.time_s.unwrap_or_default(),
                best.m.unwrap_or_default()
            );
        }
        Err(e) => {
            let _ = writeln!(out, "best by m: none ({e})");
        }
    }
    if let Some(flat) = search.state().argmax() {
        if let Ok(c) = space.decode(flat) {
            let _ = writeln!(
                out,
                "most probable: {}  p {:.6}",
                space.describe(&c),
                search.state().probability(flat)
            );
        }
    }
    let front = table.pareto_front();
    let _ = writeln!(out, "pareto front ({}):", front.len());
    for r in front {
        let _ = writeln!(
            out,
            "  {}  time {} s  accuracy {}",
            labels(r),
            r.time_s.unwrap_or_default(),
            r.accuracy.unwrap_or_default()
        );
    }
    out
}

pub fn search(args: SearchArgs) -> CmdResult {
    let config = build_config(&args.config)?;
    let kind = selected_evaluator(&args.evaluator)?;
    let space_file = match &args.space {
        Some(path) => Some(load_space(path)?),
        None => None,
    };
    let input_size = args.input_size;
    let flags = &args.evaluator;
    let (mut evaluator, space, source): (Box<dyn Evaluator>, SearchSpace, EvaluatorSource) = match kind {
        EvaluatorArg::Oracle => {
            let (oracle, space) = oracle_setup(flags.oracle.as_deref(), space_file, input_size)?;
            let path = flags.oracle.as_ref().map(|p| p.display().to_string());
            (Box::new(oracle), space, EvaluatorSource::Oracle { path })
        }
        EvaluatorArg::Synthetic => {
            let spec = match &flags.landscape {
                Some(path) => {
                    let spec: LandscapeSpec = serde_json::from_str(&read(path)?)
                        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
                    if space_file.as_ref().is_some_and(|s| *s != spec.space) {
                        return Err(Failure::config("--space differs from the landscape's space"));
                    }
                    spec
                }
                None => LandscapeSpec::new(space_file.unwrap_or_else(bundled_space), 1.0).with_noise(1.0),
            };
            let seed = flags.landscape_seed.unwrap_or(config.seed);
            let landscape = synthetic_setup(spec.clone(), seed)?;
            let space = spec.space.clone();
            (Box::new(landscape), space, EvaluatorSource::Synthetic { spec, seed })
        }
        EvaluatorArg::External => {
            let command = flags.external_cmd.clone().expect("checked by selected_evaluator");
            let timeout_s = flags.timeout_s.unwrap_or(DEFAULT_TIMEOUT_S);
            let external = external_setup(&command, &flags.external_args, timeout_s, input_size)?;
            let source = EvaluatorSource::External { command, args: flags.external_args.clone(), timeout_s };
            (Box::new(external), space_file.unwrap_or_else(bundled_space), source)
        }
    };
    let search: Search =
        Search::new(space, config, Some(input_size)).map_err(|e| Failure::config(e.to_string()))?;
    let report = args.output.report.as_deref().map(|p| (p, report_format(p, args.output.format)));
    drive(search, evaluator.as_mut(), Some(source), args.stop_after, args.output.out.as_deref(), report)
}

pub fn resume(args: ResumeArgs) -> CmdResult {
    let text = read(&args.run)?;
    let run = RunState::from_json(&text).map_err(|e| match e {
        PersistError::Io(_) | PersistError::Version { .. } | PersistError::Corrupt(_) => {
            Failure::input(format!("{}: {e}", args.run.display()))
        }
    })?;
    let input_size = run.input_size.unwrap_or(acnf::evaluators::oracle::DEFAULT_INPUT_SIZE);
    let mut source = run.evaluator.clone();
    if let Some(path) = &args.oracle {
        source = Some(EvaluatorSource::Oracle { path: Some(path.display().to_string()) });
    }
    if let (Some(t), Some(EvaluatorSource::External { timeout_s, .. })) = (args.timeout_s, source.as_mut()) {
        *timeout_s = t;
    }
    let mut search = run.into_search();
    match (search.termination(), args.extend) {
        (Some(Termination::Exhausted), _) => {
            return Err(Failure::degenerate("the run exhausted the space; nothing left to resume"))
        }
        (Some(Termination::Completed), None) => {
            return Err(Failure::config(format!(
                "{} is already complete; pass --extend N to continue",
                args.run.display()
            )))
        }
        (_, Some(0)) => return Err(Failure::config("--extend must be >= 1")),
        (_, Some(n)) => search.extend(n),
        (None, None) => {}
    }
    let mut evaluator: Box<dyn Evaluator> = match &source {
        Some(EvaluatorSource::Oracle { path }) => {
            let (oracle, _) =
                oracle_setup(path.as_deref().map(Path::new), Some(search.space().clone()), input_size)?;
            Box::new(oracle)
        }
        Some(EvaluatorSource::Synthetic { spec, seed }) => {
            if spec.space != *search.space() {
                return Err(Failure::input("landscape space differs from the run's space"));
            }
            Box::new(synthetic_setup(spec.clone(), *seed)?)
        }
        Some(EvaluatorSource::External { command, args: child_args, timeout_s }) => {
            Box::new(external_setup(command, child_args, *timeout_s, input_size)?)
        }
        None => return Err(Failure::config("the run records no evaluator; pass --oracle FILE")),
    };
    let out: PathBuf = args.out.clone().unwrap_or_else(|| args.run.clone());
    let report = args.report.as_deref().map(|p| (p, report_format(p, args.format)));
    drive(search, evaluator.as_mut(), source, args.stop_after, Some(&out), report)
}

fn plural(name: &str) -> String {
    if name.ends_with('s') {
        name.to_string()
    } else {
        format!("{name}s")
    }
}

fn describe_sizes(space: &SearchSpace) -> String {
    space
        .dimensions()
        .iter()
        .map(|d| format!("{} {}", d.len(), plural(&d.name)))
        .collect::<Vec<_>>()
        .join(" × ")
}

pub fn validate(args: ValidateArgs) -> CmdResult {
    let space_file = match &args.space {
        Some(path) => Some(load_space(path)?),
        None => None,
    };
    if let (None, Some(space)) = (&args.oracle, &space_file) {
        println!("{}; {} combinations", describe_sizes(space), space.total());
        return Ok(());
    }
    let (dataset, name) = match &args.oracle {
        Some(path) => (load_dataset(path)?, path.display().to_string()),
        None => (bundled_dataset(), "bundled table".to_string()),
    };
    let space = match space_file {
        Some(space) => space,
        None if args.oracle.is_none() => bundled_space(),
        None => dataset.infer_space().map_err(|e| Failure::input(format!("{name}: {e}")))?,
    };
    let mut sizes = dataset.input_sizes();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    for &size in &sizes {
        TableOracle::new(&dataset, size)
            .check_space(&space)
            .map_err(|e| Failure::input(format!("{name}: {e}")))?;
    }
    let counts: Vec<String> = sizes
        .iter()
        .enumerate()
        .map(|(i, &size)| {
            let n = dataset.ok_count(size);
            if i == 0 {
                format!("{n} ok rows @{size}")
            } else {
                format!("{n} @{size}")
            }
        })
        .collect();
    println!("{}; {}", describe_sizes(&space), counts.join(", "));
    let failed = dataset.rows.iter().filter(|r| !r.evaluation.status().is_ok()).count();
    if failed > 0 {
        println!("{failed} failed rows");
    }
    Ok(())
}

fn probe(labels: [&str; 3]) -> LabelMap {
    LabelMap(
        ["network", "framework", "compression"]
            .iter()
            .zip(labels)
            .map(|(d, l)| (d.to_string(), l.to_string()))
            .collect(),
    )
}

fn describe_reply(result: &Result<Evaluation, EvaluatorError>, child: &ExternalEvaluator) -> String {
    match result {
        Ok(e) if e.status() == Status::ProtocolError => {
            format!("protocol_error ({})", child.last_violation().unwrap_or("invalid reply"))
        }
        Ok(e) => match e.m() {
            Some(_) => format!(
                "ok, accuracy {} time {} s",
                e.accuracy().unwrap_or_default(),
                e.time_s().unwrap_or_default()
            ),
            None => e.status().to_string(),
        },
        Err(err) => err.to_string(),
    }
}

pub fn protocol_check(args: ProtocolArgs) -> CmdResult {
    if !(args.timeout_s.is_finite() && args.timeout_s > 0.0) {
        return Err(Failure::config(format!("--timeout-s must be > 0, got {}", args.timeout_s)));
    }
    let timeout = Duration::from_secs_f64(args.timeout_s);
    let mut checks: Vec<(&str, bool, String)> = Vec::new();
    let names = ["eval-ok", "eval-incompatible", "timeout", "liveness", "shutdown"];
    let mut child =
        match ExternalEvaluator::spawn(&args.external_cmd, &args.external_args, timeout, args.input_size) {
            Ok(child) => {
                checks.push(("handshake", true, format!("child `{}` speaks protocol 1", child.name())));
                Some(child)
            }
            Err(e) => {
                checks.push(("handshake", false, e.to_string()));
                None
            }
        };
    if let Some(mut c) = child.take() {
        let ok_probe = probe(["LRASPP-MobileNetV3-Small", "Apache TVM", "none"]);
        let absent_probe = probe(["DeepLabV3-MobileNetV2", "PyTorch", "alds-45"]);

        let reply = c.evaluate_labels(ok_probe.clone());
        let pass = matches!(&reply, Ok(e) if e.status() == Status::Ok);
        checks.push(("eval-ok", pass, describe_reply(&reply, &c)));

        let reply = c.evaluate_labels(absent_probe);
        let pass = matches!(&reply, Ok(e) if e.status() == Status::Incompatible);
        checks.push(("eval-incompatible", pass, describe_reply(&reply, &c)));

        // a zero deadline forces the parent-side timeout path
        c.set_timeout(Duration::ZERO);
        let reply = c.evaluate_labels(ok_probe.clone());
        c.set_timeout(timeout);
        let pass = matches!(&reply, Ok(e) if e.status() == Status::Timeout);
        checks.push(("timeout", pass, describe_reply(&reply, &c)));

        let reply = c.evaluate_labels(ok_probe);
        let pass = matches!(&reply, Ok(e) if !matches!(e.status(), Status::Timeout | Status::ProtocolError));
        checks.push(("liveness", pass, describe_reply(&reply, &c)));

        match c.shutdown() {
            Ok(Some(status)) if status.success() => {
                checks.push(("shutdown", true, "child exited cleanly".into()))
            }
            Ok(Some(status)) => checks.push(("shutdown", false, format!("child exited with {status}"))),
            Ok(None) => checks.push(("shutdown", false, "child ignored shutdown and was killed".into())),
            Err(e) => checks.push(("shutdown", false, e.to_string())),
        }
    } else {
        for name in names {
            checks.push((name, false, "not run: no handshake".into()));
        }
    }
    let passed = checks.iter().filter(|c| c.1).count();
    for (name, pass, detail) in &checks {
        println!("{} {name}: {detail}", if *pass { "PASS" } else { "FAIL" });
    }
    println!("{passed}/{} checks passed", checks.len());
    if passed == checks.len() {
        Ok(())
    } else {
        Err(Failure::evaluator(format!("{} protocol check(s) failed", checks.len() - passed)))
    }
}
