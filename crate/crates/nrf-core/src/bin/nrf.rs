//! Command-line driver.
//!
//! Subcommands: simulate | reconstruct | sweep-r | sampling-study | metrics.
//! Flags take `--key value` or `--key=value` form; `--config FILE` loads a
//! key=value file first, explicit flags override it. Exit codes: 0 success,
//! 1 configuration error, 2 I/O error, 3 solver divergence.

use std::path::PathBuf;
use std::process::ExitCode;

use nrf_core::cli::{cmd_metrics, cmd_reconstruct, cmd_sampling_study, cmd_simulate, cmd_sweep_r, RunConfig};
use nrf_core::error::{NrfError, Result};
use nrf_core::metrics::PsnrMode;

const USAGE: &str = "\
usage: nrf <command> [flags]

commands:
  simulate        write k-space, sinogram, schedule csv and reference image
  reconstruct     train the field and score it (plus baselines)
  sweep-r         one reconstruction per acceleration factor
  sampling-study  compare the five schedules over seeds
  metrics         score a stored image against a stored reference

flags (simulate / reconstruct / sweep-r / sampling-study):
  --config FILE      key=value file applied before other flags
  --phantom NAME     builtin (shepp-logan, simple) or a spec file path
  --n N              grid size (even, >= 8)            [64]
  --scheme NAME      uniform|limited|random|stratified|golden  [golden]
  --r-factor R       acceleration factor               [8]
  --r-list A,B,..    sweep-r factors                   [2,4,8,12]
  --seeds A,B,..     sampling-study seeds              [1,2,3]
  --seed N           top-level seed                    [0]
  --noise-sigma S    complex noise std per component   [0]
  --steps N          training steps                    [500]
  --lr X             learning rate                     [5e-4]
  --pe-l L           positional encoding order         [20]
  --baseline LIST    comma list of ifft,ink            [ifft]
  --psnr-mode MODE   mse|literal                       [mse]
  --out DIR          output directory                  [out]

flags (metrics):
  --image FILE --reference FILE [--psnr-mode MODE]

environment:
  NRF_THREADS        caps worker threads
";

fn next_value(args: &mut std::iter::Peekable<std::env::Args>, flag: &str) -> Result<String> {
    match args.next() {
        Some(v) => Ok(v),
        None => Err(NrfError::config(format!("flag {flag} needs a value"))),
    }
}

fn run() -> Result<()> {
    nrf_core::threads::ensure_pool();
    let mut args = std::env::args().peekable();
    let _bin = args.next();
    let command = match args.next() {
        Some(c) => c,
        None => {
            eprint!("{USAGE}");
            return Err(NrfError::config("missing command"));
        }
    };
    if command == "--help" || command == "-h" || command == "help" {
        print!("{USAGE}");
        return Ok(());
    }

    let mut cfg = RunConfig::default();
    let mut image: Option<PathBuf> = None;
    let mut reference: Option<PathBuf> = None;
    let mut psnr_mode = PsnrMode::Mse;
    while let Some(arg) = args.next() {
        let (flag, inline) = match arg.split_once('=') {
            Some((f, v)) => (f.to_string(), Some(v.to_string())),
            None => (arg.clone(), None),
        };
        let value = |args: &mut std::iter::Peekable<std::env::Args>| -> Result<String> {
            match &inline {
                Some(v) => Ok(v.clone()),
                None => next_value(args, &flag),
            }
        };
        match flag.as_str() {
            "--config" => {
                let path = PathBuf::from(value(&mut args)?);
                cfg.apply_file(&path)?;
            }
            "--image" => image = Some(PathBuf::from(value(&mut args)?)),
            "--reference" => reference = Some(PathBuf::from(value(&mut args)?)),
            "--psnr-mode" => {
                let v = value(&mut args)?;
                psnr_mode = PsnrMode::parse(&v)?;
                cfg.set("psnr-mode", &v)?;
            }
            _ => match flag.strip_prefix("--") {
                Some(key) => {
                    let v = value(&mut args)?;
                    cfg.set(key, &v)?;
                }
                None => return Err(NrfError::config(format!("unexpected argument '{arg}'"))),
            },
        }
    }

    match command.as_str() {
        "simulate" => cmd_simulate(&cfg),
        "reconstruct" => cmd_reconstruct(&cfg).map(|_| ()),
        "sweep-r" => cmd_sweep_r(&cfg),
        "sampling-study" => cmd_sampling_study(&cfg),
        "metrics" => {
            let image = image.ok_or_else(|| NrfError::config("metrics needs --image"))?;
            let reference =
                reference.ok_or_else(|| NrfError::config("metrics needs --reference"))?;
            cmd_metrics(&image, &reference, psnr_mode)
        }
        other => {
            eprint!("{USAGE}");
            Err(NrfError::config(format!("unknown command '{other}'")))
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nrf: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
