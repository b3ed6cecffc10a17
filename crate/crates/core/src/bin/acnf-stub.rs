//! Minimal evaluator child for exercising the JSON-lines protocol.
//!
//! ```text
//! acnf-stub [--mode replay|fixed] [--dataset FILE] [--protocol N] [--name NAME]
//!           [--sleep-ms N] [--slow-on LABEL] [--slow-ms N] [--error-on LABEL]
//!           [--silent] [--malformed] [--wrong-id] [--exit-after N]
//! ```
//!
//! `replay` answers from the bundled table (or `--dataset`), `fixed` always
//! answers accuracy 0.5 in 1 second. The remaining flags inject faults.

use std::io::{BufRead, Write};
use std::process::ExitCode;
use std::thread::sleep;
use std::time::Duration;

use acnf::evaluators::oracle::{bundled_dataset, OracleDataset};
use acnf::evaluators::protocol::{
    encode, ChildMessage, LabelMap, ParentMessage, ResultMessage, PROTOCOL_VERSION,
};

#[derive(Default)]
struct Options {
    fixed: bool,
    dataset: Option<String>,
    protocol: Option<u32>,
    name: Option<String>,
    sleep_ms: u64,
    slow_on: Option<String>,
    slow_ms: u64,
    error_on: Option<String>,
    silent: bool,
    malformed: bool,
    wrong_id: bool,
    exit_after: Option<u64>,
}

fn parse_args() -> Result<Options, String> {
    let mut opts = Options { slow_ms: 2000, ..Options::default() };
    let mut args = std::env::args().skip(1);
    while let Some(flag) = args.next() {
        let mut value = || args.next().ok_or_else(|| format!("{flag} needs a value"));
        match flag.as_str() {
            "--mode" => match value()?.as_str() {
                "fixed" => opts.fixed = true,
                "replay" => opts.fixed = false,
                other => return Err(format!("unknown mode `{other}`")),
            },
            "--dataset" => opts.dataset = Some(value()?),
            "--protocol" => opts.protocol = Some(number(&value()?)? as u32),
            "--name" => opts.name = Some(value()?),
            "--sleep-ms" => opts.sleep_ms = number(&value()?)?,
            "--slow-on" => opts.slow_on = Some(value()?),
            "--slow-ms" => opts.slow_ms = number(&value()?)?,
            "--error-on" => opts.error_on = Some(value()?),
            "--silent" => opts.silent = true,
            "--malformed" => opts.malformed = true,
            "--wrong-id" => opts.wrong_id = true,
            "--exit-after" => opts.exit_after = Some(number(&value()?)?),
            other => return Err(format!("unknown argument `{other}`")),
        }
    }
    Ok(opts)
}

fn number(text: &str) -> Result<u64, String> {
    text.parse().map_err(|_| format!("`{text}` is not a number"))
}

fn replay(dataset: &OracleDataset, labels: &LabelMap, input_size: u32, id: u64) -> ResultMessage {
    let mut wanted = Vec::with_capacity(dataset.dimension_names.len());
    for name in &dataset.dimension_names {
        match labels.get(name) {
            Some(label) => wanted.push(label),
            None => return ResultMessage::failed(id, "error", format!("missing dimension `{name}`")),
        }
    }
    let row = dataset.rows.iter().find(|row| {
        row.input_size == input_size && row.labels.iter().map(String::as_str).eq(wanted.iter().copied())
    });
    match row {
        Some(row) => ResultMessage::from_evaluation(id, &row.evaluation),
        None => ResultMessage::failed(id, "incompatible", "not in table"),
    }
}

fn mentions(labels: &LabelMap, needle: &Option<String>) -> bool {
    needle.as_ref().is_some_and(|n| labels.0.iter().any(|(_, l)| l == n))
}

fn main() -> ExitCode {
    let opts = match parse_args() {
        Ok(opts) => opts,
        Err(e) => {
            eprintln!("acnf-stub: {e}");
            return ExitCode::from(2);
        }
    };
    let dataset = match &opts.dataset {
        None => bundled_dataset(),
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(text) => text,
                Err(e) => {
                    eprintln!("acnf-stub: {path}: {e}");
                    return ExitCode::from(2);
                }
            };
            match OracleDataset::parse(&text) {
                Ok((dataset, _)) => dataset,
                Err(e) => {
                    eprintln!("acnf-stub: {path}: {e}");
                    return ExitCode::from(3);
                }
            }
        }
    };

    let stdin = std::io::stdin();
    let mut out = std::io::stdout();
    let mut answered = 0u64;
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        let message = match serde_json::from_str::<ParentMessage>(&line) {
            Ok(message) => message,
            Err(e) => {
                eprintln!("acnf-stub: bad request `{line}`: {e}");
                continue;
            }
        };
        let reply = match message {
            ParentMessage::Hello { .. } => encode(&ChildMessage::Hello {
                protocol: opts.protocol.unwrap_or(PROTOCOL_VERSION),
                name: opts.name.clone().unwrap_or_else(|| "acnf-stub".into()),
            }),
            ParentMessage::Shutdown => return ExitCode::SUCCESS,
            ParentMessage::Eval { id, combination, input_size } => {
                if opts.exit_after.is_some_and(|n| answered >= n) {
                    return ExitCode::from(1);
                }
                answered += 1;
                if opts.silent {
                    continue;
                }
                if opts.sleep_ms > 0 {
                    sleep(Duration::from_millis(opts.sleep_ms));
                }
                if mentions(&combination, &opts.slow_on) {
                    sleep(Duration::from_millis(opts.slow_ms));
                }
                if opts.malformed {
                    "{\"type\":\"result\",\"id\":".to_string()
                } else {
                    let reply_id = if opts.wrong_id { id + 1000 } else { id };
                    let result = if mentions(&combination, &opts.error_on) {
                        ResultMessage::failed(reply_id, "error", "injected failure")
                    } else if opts.fixed {
                        ResultMessage::ok(reply_id, 0.5, 1.0)
                    } else {
                        replay(&dataset, &combination, input_size, reply_id)
                    };
                    encode(&ChildMessage::Result(result))
                }
            }
        };
        if writeln!(out, "{reply}").and_then(|_| out.flush()).is_err() {
            break;
        }
    }
    ExitCode::SUCCESS
}
