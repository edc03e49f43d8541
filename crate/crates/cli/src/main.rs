//! Command-line front end: key generation, scenario runs and report rendering.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand};
use ibetrust::ibe::files::{decode_master_key, decode_params, encode_master_key, encode_params, encode_private_key};
use ibetrust::ibe::{extract, setup, Profile, SecurityConfig, DEFAULT_BLOCK_BITS};
use ibetrust::sim::{parse_log, resolve_scenario, run, write_log, LogRecord, SimOptions, SimReport};
use ibetrust::NodeId;

const PARAMS_FILE: &str = "params.bin";
const MASTER_FILE: &str = "master.key";
const LOG_FILE: &str = "events.jsonl";
const REPORT_TEXT: &str = "report.txt";
const REPORT_CSV: &str = "report.csv";

#[derive(Parser)]
#[command(name = "ibetrust", version, about = "IBE-Trust sensor network simulator")]
struct Cli {
    /// Stream every event record to stderr as it happens.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run setup and write parameters, the master key and node keys.
    Keygen {
        #[arg(long, default_value = "demo")]
        profile: Profile,
        #[arg(long)]
        out_dir: PathBuf,
        /// Node ids to extract keys for, e.g. "1-5" or "1,4,9".
        #[arg(long, default_value = "1-3")]
        roster: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BLOCK_BITS)]
        block_bits: u32,
    },
    /// Simulate a scenario and write the event log and report.
    Run {
        /// Bundled scenario name or path to a scenario file.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Directory written by `keygen`; replaces the scenario's own setup.
        #[arg(long)]
        keys: Option<PathBuf>,
    },
    /// Re-render the report from a saved event log.
    Report {
        /// Event log, or a directory containing events.jsonl.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        csv: bool,
    },
}

/// Usage and configuration problems exit with 2, everything else with 1.
enum Failure {
    Config(anyhow::Error),
    Internal(anyhow::Error),
}

fn config<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Config(e.into())
}

fn internal<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Internal(e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Keygen {
            profile,
            out_dir,
            roster,
            seed,
            block_bits,
        } => keygen(profile, &out_dir, &roster, seed, block_bits),
        Command::Run {
            scenario,
            seed,
            out,
            keys,
        } => run_scenario(&scenario, seed, &out, keys.as_deref(), cli.verbose),
        Command::Report { input, csv } => report(&input, csv),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn parse_roster(text: &str) -> anyhow::Result<Vec<NodeId>> {
    let mut ids = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (lo, hi) = match part.split_once('-') {
            Some((a, b)) => (a.trim().parse::<u16>()?, b.trim().parse::<u16>()?),
            None => {
                let v = part.parse::<u16>()?;
                (v, v)
            }
        };
        if lo == 0 || lo > hi {
            bail!("bad roster entry {part:?}: ids start at 1 and ranges run low-high");
        }
        ids.extend((lo..=hi).map(NodeId));
    }
    ids.sort();
    ids.dedup();
    if ids.is_empty() {
        bail!("roster is empty");
    }
    Ok(ids)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(config)
}

fn keygen(profile: Profile, out_dir: &Path, roster: &str, seed: u64, block_bits: u32) -> Result<(), Failure> {
    let roster = parse_roster(roster).map_err(config)?;
    let mut cfg = SecurityConfig::for_profile(profile, seed);
    cfg.block_bits = block_bits;
    let (params, master) = setup(&cfg).map_err(config)?;
    fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))
        .map_err(config)?;
    write(&out_dir.join(PARAMS_FILE), &encode_params(&params))?;
    write(&out_dir.join(MASTER_FILE), &encode_master_key(&master))?;
    for id in std::iter::once(NodeId::BASE_STATION).chain(roster.iter().copied()) {
        let key = extract(&params, &master, &id.identity()).map_err(internal)?;
        write(&out_dir.join(format!("{}.key", id.identity())), &encode_private_key(&key))?;
    }
    println!(
        "wrote {} profile parameters, master key and {} private keys to {}",
        profile,
        roster.len() + 1,
        out_dir.display()
    );
    Ok(())
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(config)
}

fn run_scenario(name: &str, seed: Option<u64>, out: &Path, keys: Option<&Path>, verbose: bool) -> Result<(), Failure> {
    let scenario = resolve_scenario(name)
        .with_context(|| format!("scenario {name:?}"))
        .map_err(config)?;
    let keys = match keys {
        Some(dir) => {
            let params = decode_params(&read(&dir.join(PARAMS_FILE))?)
                .with_context(|| format!("{}", dir.join(PARAMS_FILE).display()))
                .map_err(config)?;
            let master = decode_master_key(&params, &read(&dir.join(MASTER_FILE))?)
                .with_context(|| format!("{}", dir.join(MASTER_FILE).display()))
                .map_err(config)?;
            Some((params, master))
        }
        None => None,
    };
    let opts = SimOptions {
        seed,
        keys,
        ..SimOptions::default()
    };
    let mut stream = |r: &LogRecord| eprintln!("{}", r.to_line());
    let observer: Option<&mut dyn FnMut(&LogRecord)> = if verbose { Some(&mut stream) } else { None };
    let records = run(&scenario, &opts, observer).map_err(|e| match e {
        ibetrust::sim::SimError::Config(_) => config(e),
        other => internal(other),
    })?;
    let report = SimReport::from_log(&records).map_err(|e| internal(anyhow!(e)))?;
    fs::create_dir_all(out)
        .with_context(|| format!("cannot create {}", out.display()))
        .map_err(config)?;
    let text = report.render_text();
    write(&out.join(LOG_FILE), write_log(&records).as_bytes())?;
    write(&out.join(REPORT_TEXT), text.as_bytes())?;
    write(&out.join(REPORT_CSV), report.render_csv().as_bytes())?;
    print!("{text}");
    Ok(())
}

fn report(input: &Path, csv: bool) -> Result<(), Failure> {
    let path = if input.is_dir() { input.join(LOG_FILE) } else { input.to_path_buf() };
    let text = String::from_utf8(read(&path)?).map_err(config)?;
    let records = parse_log(&text)
        .map_err(|e| anyhow!(e))
        .with_context(|| format!("{}", path.display()))
        .map_err(config)?;
    let report = SimReport::from_log(&records)
        .map_err(|e| anyhow!(e))
        .with_context(|| format!("{}", path.display()))
        .map_err(config)?;
    if csv {
        print!("{}", report.render_csv());
    } else {
        print!("{}", report.render_text());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roster_forms() {
        assert_eq!(parse_roster("1-3").unwrap(), vec![NodeId(1), NodeId(2), NodeId(3)]);
        assert_eq!(parse_roster("4, 1,2-2").unwrap(), vec![NodeId(1), NodeId(2), NodeId(4)]);
        assert!(parse_roster("0-2").is_err());
        assert!(parse_roster("3-1").is_err());
        assert!(parse_roster("").is_err());
        assert!(parse_roster("x").is_err());
    }
}
