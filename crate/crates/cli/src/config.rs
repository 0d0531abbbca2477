//! Flag and config-file merging into a fully explicit [`RunConfig`].

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use wstate::dynamics::Frame;
use wstate::protocol::{SweepParameter, SweepSpec};

use crate::error::{bad, Failure};

pub const DEFAULT_N: usize = 3;
pub const DEFAULT_EPSILON: f64 = 1.0;
pub const DEFAULT_N_MAX: u32 = 1;
pub const DEFAULT_CAP: u32 = 1;
/// Atomic frequency used in the lab frame, in units of ε.
pub const DEFAULT_OMEGA0: f64 = 10.0;
pub const DEFAULT_DISORDER_TRIALS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Simulate,
    Sweep,
    Entanglement,
    Validate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FrameArg {
    Lab,
    Interaction,
}

impl From<FrameArg> for Frame {
    fn from(f: FrameArg) -> Frame {
        match f {
            FrameArg::Lab => Frame::Lab,
            FrameArg::Interaction => Frame::Interaction,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ParamArg {
    Timing,
    Disorder,
    Detuning,
    Modes,
}

impl From<ParamArg> for SweepParameter {
    fn from(p: ParamArg) -> SweepParameter {
        match p {
            ParamArg::Timing => SweepParameter::TimingError,
            ParamArg::Disorder => SweepParameter::CouplingDisorder,
            ParamArg::Detuning => SweepParameter::Detuning,
            ParamArg::Modes => SweepParameter::ModeCount,
        }
    }
}

/// Flags accepted by every subcommand. All are optional so that a config
/// file can supply them; flags win over file values.
#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// Flat TOML file of `key = value` settings (same names as the flags).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Number of cavity modes.
    #[arg(long)]
    pub n: Option<usize>,
    /// Atom–mode coupling strength.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Interaction time, in units of 1/ε (seconds with --si). Defaults to t*.
    #[arg(long, allow_hyphen_values = true)]
    pub time: Option<f64>,
    #[arg(long, value_enum)]
    pub frame: Option<FrameArg>,
    /// Largest photon number per mode.
    #[arg(long)]
    pub nmax: Option<u32>,
    /// Cap on total excitations, or "none".
    #[arg(long)]
    pub cap: Option<String>,
    /// Atomic transition frequency for the lab frame, in units of ε (rad/s with --si).
    #[arg(long, allow_hyphen_values = true)]
    pub omega0: Option<f64>,
    /// Read times in seconds and frequencies in rad/s.
    #[arg(long)]
    pub si: bool,
    /// Output file; standard output when absent or "-".
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Include state amplitudes in the report.
    #[arg(long)]
    pub dump_state: bool,
    /// Swept quantity (sweep only).
    #[arg(long, value_enum)]
    pub param: Option<ParamArg>,
    /// Comma-separated grid values (sweep only).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
    pub grid: Option<Vec<f64>>,
    /// Evenly spaced grid as START:STOP:COUNT (sweep only).
    #[arg(long, allow_hyphen_values = true)]
    pub range: Option<String>,
    /// Monte Carlo trials per grid point (sweep only).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Free-form timestamp copied into sweep metadata.
    #[arg(long)]
    pub timestamp: Option<String>,
    /// Corrupts one Hamiltonian element so validate must fail.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CapSetting {
    Limit(u32),
    Word(String),
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    n: Option<usize>,
    epsilon: Option<f64>,
    time: Option<f64>,
    frame: Option<FrameArg>,
    nmax: Option<u32>,
    cap: Option<CapSetting>,
    omega0: Option<f64>,
    si: Option<bool>,
    out: Option<PathBuf>,
    format: Option<Format>,
    seed: Option<u64>,
    dump_state: Option<bool>,
    param: Option<ParamArg>,
    grid: Option<Vec<f64>>,
    range: Option<String>,
    trials: Option<usize>,
    timestamp: Option<String>,
}

impl FileConfig {
    fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| bad(format!("config {}: {e}", path.display())))
    }
}

/// Resolved settings; every default is filled in and the whole struct is
/// echoed into each output.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub n_modes: usize,
    pub epsilon: f64,
    /// In units of 1/ε, or seconds when `si` is set.
    pub time: Option<f64>,
    /// Engine-ready spec; grid values are in ε units regardless of `si`.
    pub sweep: Option<SweepSpec>,
    pub output_path: String,
    pub format: Format,
    pub frame: FrameArg,
    pub n_max: u32,
    pub excitation_cap: Option<u32>,
    /// In units of ε, or rad/s when `si` is set.
    pub omega0: f64,
    pub si: bool,
    pub seed: u64,
    pub dump_state: bool,
    pub timestamp: Option<String>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub inject_fault: bool,
}

impl RunConfig {
    pub fn physical_time(&self) -> Option<f64> {
        self.time.map(|t| if self.si { t } else { t / self.epsilon })
    }

    pub fn physical_omega0(&self) -> f64 {
        if self.si {
            self.omega0
        } else {
            self.omega0 * self.epsilon
        }
    }

    pub fn output_file(&self) -> Option<&Path> {
        (self.output_path != "-").then(|| Path::new(&self.output_path))
    }
}

fn parse_cap(s: &str) -> Result<Option<u32>, Failure> {
    match s.trim() {
        "none" => Ok(None),
        v => v.parse().map(Some).map_err(|_| bad(format!("cap must be a non-negative integer or \"none\", got {s:?}"))),
    }
}

fn parse_range(s: &str) -> Result<Vec<f64>, Failure> {
    let err = || bad(format!("range must look like START:STOP:COUNT, got {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts.as_slice() else { return Err(err()) };
    let start: f64 = a.trim().parse().map_err(|_| err())?;
    let stop: f64 = b.trim().parse().map_err(|_| err())?;
    let count: usize = c.trim().parse().map_err(|_| err())?;
    if count == 0 {
        return Err(err());
    }
    Ok(SweepSpec::linspace(start, stop, count))
}

fn default_grid(parameter: SweepParameter, n: usize) -> Vec<f64> {
    match parameter {
        SweepParameter::TimingError => {
            let span = 0.2 * PI / (2.0 * (n as f64).sqrt());
            SweepSpec::linspace(-span, span, 41)
        }
        SweepParameter::CouplingDisorder => vec![0.0, 0.01, 0.02, 0.05, 0.1, 0.2],
        SweepParameter::Detuning => SweepSpec::linspace(-5.0, 5.0, 21),
        SweepParameter::ModeCount => (1..=8).map(f64::from).collect(),
    }
}

fn finite(name: &str, x: f64) -> Result<f64, Failure> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad(format!("{name} must be finite, got {x}")))
    }
}

pub fn resolve(command: Command, flags: &Flags) -> Result<RunConfig, Failure> {
    let file = match &flags.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let si = flags.si || file.si.unwrap_or(false);

    let n_modes = flags.n.or(file.n).unwrap_or(DEFAULT_N);
    if n_modes == 0 {
        return Err(bad("n must be at least 1"));
    }
    let epsilon = finite("epsilon", flags.epsilon.or(file.epsilon).unwrap_or(DEFAULT_EPSILON))?;
    if epsilon <= 0.0 {
        return Err(bad(format!("epsilon must be positive, got {epsilon}")));
    }
    let n_max = flags.nmax.or(file.nmax).unwrap_or(DEFAULT_N_MAX);
    if n_max == 0 {
        return Err(bad("nmax must be at least 1"));
    }
    let excitation_cap = match (&flags.cap, &file.cap) {
        (Some(s), _) | (None, Some(CapSetting::Word(s))) => parse_cap(s)?,
        (None, Some(CapSetting::Limit(c))) => Some(*c),
        (None, None) => Some(DEFAULT_CAP),
    };
    let omega0 = finite(
        "omega0",
        flags.omega0.or(file.omega0).unwrap_or(if si { DEFAULT_OMEGA0 * epsilon } else { DEFAULT_OMEGA0 }),
    )?;

    let t_star = PI / (2.0 * (n_modes as f64).sqrt());
    let time = match (flags.time.or(file.time), command) {
        (Some(t), _) => Some(finite("time", t)?),
        (None, Command::Simulate | Command::Entanglement) => Some(if si { t_star / epsilon } else { t_star }),
        (None, _) => None,
    };

    let seed = flags.seed.or(file.seed).unwrap_or(0);
    let sweep = match command {
        Command::Sweep => Some(resolve_sweep(flags, &file, n_modes, epsilon, si, seed)?),
        _ => None,
    };

    let format = flags.format.or(file.format).unwrap_or(match command {
        Command::Sweep => Format::Csv,
        _ => Format::Json,
    });
    let output_path = flags
        .out
        .clone()
        .or(file.out)
        .map(|p| p.to_string_lossy().into_owned())
        .unwrap_or_else(|| "-".into());
    if output_path.is_empty() {
        return Err(bad("output path is empty"));
    }

    Ok(RunConfig {
        command,
        n_modes,
        epsilon,
        time,
        sweep,
        output_path,
        format,
        frame: flags.frame.or(file.frame).unwrap_or(FrameArg::Interaction),
        n_max,
        excitation_cap,
        omega0,
        si,
        seed,
        dump_state: flags.dump_state || file.dump_state.unwrap_or(false),
        timestamp: flags.timestamp.clone().or(file.timestamp),
        inject_fault: flags.inject_fault,
    })
}

fn resolve_sweep(
    flags: &Flags,
    file: &FileConfig,
    n: usize,
    epsilon: f64,
    si: bool,
    seed: u64,
) -> Result<SweepSpec, Failure> {
    let parameter: SweepParameter =
        flags.param.or(file.param).ok_or_else(|| bad("sweep needs --param timing|disorder|detuning|modes"))?.into();
    if flags.grid.is_some() && flags.range.is_some() {
        return Err(bad("give either --grid or --range, not both"));
    }
    let grid = match (&flags.grid, &flags.range) {
        (Some(g), _) => g.clone(),
        (None, Some(r)) => parse_range(r)?,
        (None, None) => match (&file.grid, &file.range) {
            (Some(_), Some(_)) => return Err(bad("config sets both grid and range")),
            (Some(g), None) => g.clone(),
            (None, Some(r)) => parse_range(r)?,
            (None, None) => default_grid(parameter, n),
        },
    };
    // The engine works in ε units; SI grids are converted before it sees them.
    let grid = match (si, parameter) {
        (true, SweepParameter::TimingError) => grid.into_iter().map(|x| x * epsilon).collect(),
        (true, SweepParameter::Detuning) => grid.into_iter().map(|x| x / epsilon).collect(),
        _ => grid,
    };
    let trials = flags.trials.or(file.trials).unwrap_or(match parameter {
        SweepParameter::CouplingDisorder => DEFAULT_DISORDER_TRIALS,
        _ => 1,
    });
    let spec = SweepSpec::new(parameter, grid).with_trials(trials).with_seed(seed);
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_materialized() {
        let cfg = resolve(Command::Simulate, &Flags::default()).unwrap();
        assert_eq!(cfg.n_modes, DEFAULT_N);
        assert_eq!(cfg.excitation_cap, Some(DEFAULT_CAP));
        assert!((cfg.time.unwrap() - PI / (2.0 * 3f64.sqrt())).abs() < 1e-15);
        assert_eq!(cfg.output_path, "-");
        assert_eq!(cfg.format, Format::Json);
    }

    #[test]
    fn si_units_convert() {
        let flags = Flags { epsilon: Some(2.0), time: Some(0.5), omega0: Some(8.0), si: true, ..Flags::default() };
        let cfg = resolve(Command::Simulate, &flags).unwrap();
        assert_eq!(cfg.physical_time(), Some(0.5));
        assert_eq!(cfg.physical_omega0(), 8.0);
        let cfg = resolve(Command::Simulate, &Flags { si: false, ..flags }).unwrap();
        assert_eq!(cfg.physical_time(), Some(0.25));
        assert_eq!(cfg.physical_omega0(), 16.0);
    }

    #[test]
    fn sweep_grid_sources() {
        let flags = Flags { param: Some(ParamArg::Timing), range: Some("-1:1:5".into()), ..Flags::default() };
        let spec = resolve(Command::Sweep, &flags).unwrap().sweep.unwrap();
        assert_eq!(spec.grid, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let both = Flags { grid: Some(vec![0.0]), ..flags };
        assert!(resolve(Command::Sweep, &both).is_err());
        assert!(resolve(Command::Sweep, &Flags::default()).is_err());
        let disorder = Flags { param: Some(ParamArg::Disorder), ..Flags::default() };
        assert_eq!(resolve(Command::Sweep, &disorder).unwrap().sweep.unwrap().trials, DEFAULT_DISORDER_TRIALS);
    }

    #[test]
    fn cap_parsing() {
        assert_eq!(parse_cap("none").unwrap(), None);
        assert_eq!(parse_cap("4").unwrap(), Some(4));
        assert!(parse_cap("-1").is_err());
        assert!(parse_range("1:2").is_err());
    }
}
