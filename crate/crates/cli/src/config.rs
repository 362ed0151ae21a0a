//! Run configuration as flat `key = value` text. Keys are the long flag
//! names without the leading dashes; flags given on the command line are
//! applied after the file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rnrr_core::{Kernel, Sampler, SolverParams};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub source: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Indices of source vertices to evaluate, one per line.
    pub retained: Option<PathBuf>,
    pub seed: u64,
    pub timing: bool,
    pub solver: SolverParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            source: None,
            target: None,
            gt: None,
            out: None,
            retained: None,
            seed: 0,
            timing: true,
            solver: SolverParams::default(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value `{value}` for `{key}`"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("invalid value `{value}` for `{key}` (expected true or false)")),
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let p = &mut self.solver;
        let path = || Some(PathBuf::from(value));
        match key {
            "source" => self.source = path(),
            "target" => self.target = path(),
            "gt" => self.gt = path(),
            "out" => self.out = path(),
            "retained" => self.retained = path(),
            "seed" => self.seed = parse(key, value)?,
            "timing" => self.timing = parse_bool(key, value)?,
            "kernel" => p.kernel = value.parse::<Kernel>().map_err(|e| e.to_string())?,
            "sampler" => p.sampler = value.parse::<Sampler>().map_err(|e| e.to_string())?,
            "radius-factor" => p.radius_factor = parse(key, value)?,
            "k-alpha" => p.k_alpha = parse(key, value)?,
            "k-beta" => p.k_beta = parse(key, value)?,
            "nu-a-max-factor" => p.nu_a_max_factor = parse(key, value)?,
            "nu-a-min-factor" => p.nu_a_min_factor = parse(key, value)?,
            "nu-r-max-factor" => p.nu_r_max_factor = parse(key, value)?,
            "fixed-nu" => p.fixed_nu = parse_bool(key, value)?,
            "eps-d" => p.icp.rejection.max_distance = parse(key, value)?,
            "theta" => p.icp.rejection.max_angle_deg = parse(key, value)?,
            "icp-iterations" => p.icp.iterations = parse(key, value)?,
            "rigid-init" => p.rigid_init = parse_bool(key, value)?,
            "m" => p.m = parse(key, value)?,
            "gamma" => p.gamma = parse(key, value)?,
            "eps1" => p.eps1 = parse(key, value)?,
            "eps2" => p.eps2 = parse(key, value)?,
            "imax" => p.i_max = parse(key, value)?,
            "max-inner" => p.max_inner_iterations = parse(key, value)?,
            _ => return Err(format!("unknown configuration key `{key}`")),
        }
        Ok(())
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), String> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", n + 1))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| format!("line {}: {e}", n + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        self.apply_text(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Every key, in a fixed order, so that `apply_text(to_text())` on a
    /// default config reproduces `self`.
    pub fn to_text(&self) -> String {
        let p = &self.solver;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        for (k, v) in [
            ("source", &self.source),
            ("target", &self.target),
            ("gt", &self.gt),
            ("out", &self.out),
            ("retained", &self.retained),
        ] {
            if let Some(v) = v {
                put(k, v.display().to_string());
            }
        }
        put("seed", self.seed.to_string());
        put("timing", self.timing.to_string());
        put("kernel", p.kernel.to_string());
        put("sampler", p.sampler.to_string());
        put("radius-factor", p.radius_factor.to_string());
        put("k-alpha", p.k_alpha.to_string());
        put("k-beta", p.k_beta.to_string());
        put("nu-a-max-factor", p.nu_a_max_factor.to_string());
        put("nu-a-min-factor", p.nu_a_min_factor.to_string());
        put("nu-r-max-factor", p.nu_r_max_factor.to_string());
        put("fixed-nu", p.fixed_nu.to_string());
        put("eps-d", p.icp.rejection.max_distance.to_string());
        put("theta", p.icp.rejection.max_angle_deg.to_string());
        put("icp-iterations", p.icp.iterations.to_string());
        put("rigid-init", p.rigid_init.to_string());
        put("m", p.m.to_string());
        put("gamma", p.gamma.to_string());
        put("eps1", p.eps1.to_string());
        put("eps2", p.eps2.to_string());
        put("imax", p.i_max.to_string());
        put("max-inner", p.max_inner_iterations.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_text() {
        let mut c = RunConfig::default();
        c.source = Some("a/b c.obj".into());
        c.gt = Some("gt.ply".into());
        c.seed = 12345678901234;
        c.timing = false;
        c.solver.kernel = Kernel::L2;
        c.solver.sampler = Sampler::Farthest;
        c.solver.radius_factor = 0.1 + 0.2;
        c.solver.eps1 = 1.0 / 3.0;
        c.solver.icp.rejection.max_angle_deg = 45.0;
        c.solver.fixed_nu = true;
        c.solver.i_max = 7;
        let mut back = RunConfig::default();
        back.apply_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), c.to_text());
    }

    #[test]
    fn later_values_win() {
        let mut c = RunConfig::default();
        c.apply_text("# experiment\nk-beta = 100\n\ntheta=45\n").unwrap();
        c.set("k-beta", "2").unwrap();
        assert_eq!(c.solver.k_beta, 2.0);
        assert_eq!(c.solver.icp.rejection.max_angle_deg, 45.0);
    }

    #[test]
    fn rejects_bad_lines() {
        let mut c = RunConfig::default();
        assert!(c.apply_text("k-beta 100").unwrap_err().contains("line 1"));
        assert!(c.apply_text("colour = red").unwrap_err().contains("unknown"));
        assert!(c.apply_text("imax = -1").is_err());
        assert!(c.apply_text("kernel = huber").is_err());
        assert!(c.apply_text("fixed-nu = maybe").is_err());
    }
}
