//! Run configuration: defaults, then a `key = value` file, then flags.

use std::fs;
use std::path::{Path, PathBuf};

use relaxed_control::benchmarks::{by_name, Benchmark, MobileNetwork, MobileNetworkParams};
use relaxed_control::{BlockOrder, Error, Mode, PwmConfig, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PwmCycle {
    Seconds(f64),
    Steps(usize),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetworkOverrides {
    pub d: Option<f64>,
    pub c: Option<f64>,
    pub u_bar: Option<f64>,
    pub t_f: Option<f64>,
    pub x0: Option<Vec<f64>>,
}

impl NetworkOverrides {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

/// Every setting a run can take, each optional so layers can be merged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub problem: Option<String>,
    pub dt: Option<f64>,
    pub iters: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub eta: Option<f64>,
    pub mode: Option<Mode>,
    pub pwm_cycle: Option<PwmCycle>,
    pub pwm_order: Option<BlockOrder>,
    pub out: Option<PathBuf>,
    pub network: NetworkOverrides,
}

fn bad(msg: String) -> Error {
    Error::InvalidConfig(msg)
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, Error> {
    value
        .parse()
        .map_err(|_| bad(format!("`{key}`: cannot parse `{value}`")))
}

impl Settings {
    /// Parses a `key = value` file; `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read config file {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self, Error> {
        let mut s = Settings::default();
        let mut cycle_seconds = None;
        let mut cycle_steps = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim().replace('-', "_");
            let value = value.trim();
            match key.as_str() {
                "problem" => s.problem = Some(value.to_string()),
                "dt" => s.dt = Some(parse(&key, value)?),
                "iters" => s.iters = Some(parse(&key, value)?),
                "alpha" => s.alpha = Some(parse(&key, value)?),
                "beta" => s.beta = Some(parse(&key, value)?),
                "eta" => s.eta = Some(parse(&key, value)?),
                "mode" => s.mode = Some(value.parse()?),
                "pwm_cycle" => cycle_seconds = Some(parse(&key, value)?),
                "pwm_cycle_steps" => cycle_steps = Some(parse(&key, value)?),
                "pwm_order" => s.pwm_order = Some(value.parse()?),
                "out" => s.out = Some(PathBuf::from(value)),
                "network.d" => s.network.d = Some(parse(&key, value)?),
                "network.c" => s.network.c = Some(parse(&key, value)?),
                "network.u_bar" => s.network.u_bar = Some(parse(&key, value)?),
                "network.t_f" => s.network.t_f = Some(parse(&key, value)?),
                "network.x0" => {
                    let x0 = value
                        .split(',')
                        .map(|v| parse::<f64>(&key, v.trim()))
                        .collect::<Result<_, _>>()?;
                    s.network.x0 = Some(x0);
                }
                other => return Err(bad(format!("line {}: unknown key `{other}`", i + 1))),
            }
        }
        s.pwm_cycle = match (cycle_seconds, cycle_steps) {
            (Some(_), Some(_)) => {
                return Err(bad("set only one of `pwm_cycle` and `pwm_cycle_steps`".into()))
            }
            (Some(t), None) => Some(PwmCycle::Seconds(t)),
            (None, Some(n)) => Some(PwmCycle::Steps(n)),
            (None, None) => None,
        };
        Ok(s)
    }

    /// `self` wins wherever it has a value.
    pub fn over(self, base: Settings) -> Settings {
        let n = self.network;
        let b = base.network;
        Settings {
            problem: self.problem.or(base.problem),
            dt: self.dt.or(base.dt),
            iters: self.iters.or(base.iters),
            alpha: self.alpha.or(base.alpha),
            beta: self.beta.or(base.beta),
            eta: self.eta.or(base.eta),
            mode: self.mode.or(base.mode),
            pwm_cycle: self.pwm_cycle.or(base.pwm_cycle),
            pwm_order: self.pwm_order.or(base.pwm_order),
            out: self.out.or(base.out),
            network: NetworkOverrides {
                d: n.d.or(b.d),
                c: n.c.or(b.c),
                u_bar: n.u_bar.or(b.u_bar),
                t_f: n.t_f.or(b.t_f),
                x0: n.x0.or(b.x0),
            },
        }
    }
}

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_ITERS: usize = 100;

/// A fully resolved run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: String,
    pub dt: f64,
    pub solver: SolverConfig,
    pub mode: Option<Mode>,
    pub pwm_cycle: Option<PwmCycle>,
    pub pwm_order: BlockOrder,
    pub out: PathBuf,
    pub network: NetworkOverrides,
}

impl RunConfig {
    pub fn resolve(s: Settings) -> Result<Self, Error> {
        let problem = s
            .problem
            .ok_or_else(|| bad("no problem given".into()))?;
        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            alpha: s.alpha.unwrap_or(defaults.alpha),
            beta: s.beta.unwrap_or(defaults.beta),
            eta: s.eta.unwrap_or(defaults.eta),
            max_iters: s.iters.unwrap_or(DEFAULT_ITERS),
            ..defaults
        };
        solver.validate()?;
        let dt = s.dt.unwrap_or(DEFAULT_DT);
        if !(dt.is_finite() && dt > 0.0) {
            return Err(bad(format!("dt must be positive, got {dt}")));
        }
        if !s.network.is_empty() && problem != "mobile-network" {
            return Err(bad(format!("network.* keys only apply to mobile-network, not {problem}")));
        }
        Ok(RunConfig {
            problem,
            dt,
            solver,
            mode: s.mode,
            pwm_cycle: s.pwm_cycle,
            pwm_order: s.pwm_order.unwrap_or_default(),
            out: s.out.unwrap_or_else(|| PathBuf::from("out")),
            network: s.network,
        })
    }

    pub fn benchmark(&self) -> Result<Box<dyn Benchmark>, Error> {
        benchmark(&self.problem, &self.network)
    }

    pub fn pwm(&self, dt: f64) -> Result<Option<PwmConfig>, Error> {
        pwm_config(self.pwm_cycle, self.pwm_order, dt)
    }
}

pub fn benchmark(name: &str, network: &NetworkOverrides) -> Result<Box<dyn Benchmark>, Error> {
    if name != "mobile-network" || network.is_empty() {
        return by_name(name);
    }
    let d = MobileNetworkParams::default();
    let params = MobileNetworkParams {
        d: network.d.unwrap_or(d.d),
        c: network.c.unwrap_or(d.c),
        u_bar: network.u_bar.unwrap_or(d.u_bar),
        t_f: network.t_f.unwrap_or(d.t_f),
        x0: network.x0.clone().unwrap_or(d.x0),
    };
    Ok(Box::new(MobileNetwork::new(params)?))
}

pub fn pwm_config(cycle: Option<PwmCycle>, order: BlockOrder, dt: f64) -> Result<Option<PwmConfig>, Error> {
    let cfg = match cycle {
        None => return Ok(None),
        Some(PwmCycle::Seconds(t)) => PwmConfig::from_seconds(t, dt)?,
        Some(PwmCycle::Steps(n)) => PwmConfig::new(n)?,
    };
    Ok(Some(cfg.with_order(order)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_keys_parse() {
        let s = Settings::from_text(
            "# table 2\nproblem = hybrid-lqr\ndt = 0.01\niters = 20\nmode = general\npwm-cycle-steps = 12\n",
        )
        .unwrap();
        assert_eq!(s.problem.as_deref(), Some("hybrid-lqr"));
        assert_eq!(s.iters, Some(20));
        assert_eq!(s.mode, Some(Mode::General));
        assert_eq!(s.pwm_cycle, Some(PwmCycle::Steps(12)));
    }

    #[test]
    fn flags_win() {
        let file = Settings::from_text("dt = 0.1\niters = 5\nalpha = 0.2").unwrap();
        let flags = Settings { dt: Some(0.05), ..Default::default() };
        let s = flags.over(file);
        assert_eq!((s.dt, s.iters, s.alpha), (Some(0.05), Some(5), Some(0.2)));
    }

    #[test]
    fn bad_files_are_rejected() {
        assert!(Settings::from_text("speed = 3").is_err());
        assert!(Settings::from_text("dt 0.1").is_err());
        assert!(Settings::from_text("pwm_cycle = 0.5\npwm_cycle_steps = 50").is_err());
        assert!(Settings::from_text("mode = fast").is_err());
    }

    #[test]
    fn network_overrides_need_the_network() {
        let s = Settings::from_text("problem = double-tank\nnetwork.c = 3").unwrap();
        assert!(RunConfig::resolve(s).is_err());
        let s = Settings::from_text("problem = mobile-network\nnetwork.x0 = 1, 5, 9").unwrap();
        let b = RunConfig::resolve(s).unwrap().benchmark().unwrap();
        assert_eq!(b.state_dim(), 3);
    }
}
