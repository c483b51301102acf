//! Flag and config-file parsing. A JSON config supplies defaults; command
//! line flags win. Unknown keys and malformed values are configuration
//! errors.

use serde_json::Value;

#[derive(Clone, Debug)]
pub struct Opts {
    pub out_dir: String,
    pub jobs: usize,
    pub seed: u64,
    pub k: Option<u32>,
    pub l: Option<u32>,
    pub a_max: Option<usize>,
    pub m_max: Option<usize>,
    pub trials: Option<usize>,
    pub t: Option<f64>,
    pub eta: Option<f64>,
    pub b_exponent: Option<f64>,
    pub rho: Option<f64>,
    pub x_box: Option<f64>,
    pub r_list: Option<Vec<i64>>,
    pub s_re: Option<f64>,
    pub rq: Option<u64>,
    pub series_n: Option<u64>,
    pub prime_cutoff: Option<u64>,
    pub shift_spacing: Option<f64>,
    pub shifts_i: Option<Vec<(f64, f64)>>,
    pub shifts_j: Option<Vec<(f64, f64)>>,
}

impl Default for Opts {
    fn default() -> Self {
        Opts {
            out_dir: "out".into(),
            jobs: crate::dm_jobs_default(),
            seed: 0x5eed,
            k: None,
            l: None,
            a_max: None,
            m_max: None,
            trials: None,
            t: None,
            eta: None,
            b_exponent: None,
            rho: None,
            x_box: None,
            r_list: None,
            s_re: None,
            rq: None,
            series_n: None,
            prime_cutoff: None,
            shift_spacing: None,
            shifts_i: None,
            shifts_j: None,
        }
    }
}

/// Parses "a..b" (inclusive) or a comma list into the r grid.
pub fn parse_r_range(s: &str) -> Result<Vec<i64>, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: i64 = a.parse().map_err(|_| format!("bad r range start {a}"))?;
        let b: i64 = b.parse().map_err(|_| format!("bad r range end {b}"))?;
        if b < a {
            return Err(format!("empty r range {s}"));
        }
        Ok((a..=b).collect())
    } else {
        s.split(',')
            .map(|x| x.trim().parse::<i64>().map_err(|_| format!("bad r value {x}")))
            .collect()
    }
}

fn parse_shift_list(v: &Value) -> Result<Vec<(f64, f64)>, String> {
    let arr = v.as_array().ok_or("shift list must be an array of [re, im] pairs")?;
    arr.iter()
        .map(|p| {
            let pair = p.as_array().filter(|a| a.len() == 2).ok_or("shift must be [re, im]")?;
            Ok((
                pair[0].as_f64().ok_or("shift component must be a number")?,
                pair[1].as_f64().ok_or("shift component must be a number")?,
            ))
        })
        .collect()
}

impl Opts {
    fn apply(&mut self, key: &str, value: &Value) -> Result<(), String> {
        let as_f64 =
            || value.as_f64().ok_or_else(|| format!("{key} expects a number, got {value}"));
        let as_u64 = || {
            value
                .as_u64()
                .or_else(|| value.as_f64().filter(|x| x.fract() == 0.0 && *x >= 0.0).map(|x| x as u64))
                .ok_or_else(|| format!("{key} expects a nonnegative integer, got {value}"))
        };
        match key {
            "out" => {
                self.out_dir =
                    value.as_str().ok_or_else(|| format!("{key} expects a string"))?.to_string()
            }
            "jobs" => self.jobs = as_u64()?.max(1) as usize,
            "seed" => self.seed = as_u64()?,
            "k" => self.k = Some(as_u64()? as u32),
            "l" => self.l = Some(as_u64()? as u32),
            "a-max" | "a_max" => self.a_max = Some(as_u64()? as usize),
            "m-max" | "m_max" => self.m_max = Some(as_u64()? as usize),
            "trials" => self.trials = Some(as_u64()? as usize),
            "T" | "t" => self.t = Some(as_f64()?),
            "eta" => self.eta = Some(as_f64()?),
            "b" | "b_exponent" => self.b_exponent = Some(as_f64()?),
            "rho" => self.rho = Some(as_f64()?),
            "X" | "x" | "x_box" => self.x_box = Some(as_f64()?),
            "r" | "r_list" => {
                let spec = match value {
                    Value::String(s) => s.clone(),
                    Value::Array(xs) => xs
                        .iter()
                        .map(|x| x.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                    other => other.to_string(),
                };
                self.r_list = Some(parse_r_range(&spec)?);
            }
            "s" | "s_re" => self.s_re = Some(as_f64()?),
            "rq" => self.rq = Some(as_u64()?),
            "series-n" | "series_n" => self.series_n = Some(as_u64()?),
            "prime-cutoff" | "prime_cutoff" => self.prime_cutoff = Some(as_u64()?),
            "shift-spacing" | "shift_spacing" => self.shift_spacing = Some(as_f64()?),
            "shifts-i" | "shifts_i" => self.shifts_i = Some(parse_shift_list(value)?),
            "shifts-j" | "shifts_j" => self.shifts_j = Some(parse_shift_list(value)?),
            other => return Err(format!("unknown option {other}")),
        }
        Ok(())
    }

    /// Parses `argv` (without the program name): first the subcommand, then
    /// `--key value` flags; a `--config file.json` is applied first so that
    /// explicit flags override it.
    pub fn parse(argv: &[String]) -> Result<(String, Opts), String> {
        let mut it = argv.iter();
        let command = it.next().ok_or("missing command")?.clone();
        if !crate::COMMANDS.contains(&command.as_str()) {
            return Err(format!("unknown command {command}"));
        }
        let rest: Vec<&String> = it.collect();
        if rest.len() % 2 != 0 {
            return Err("flags come in --key value pairs".into());
        }
        let mut pairs: Vec<(String, String)> = Vec::new();
        let mut config_path: Option<String> = None;
        for chunk in rest.chunks(2) {
            let key = chunk[0]
                .strip_prefix("--")
                .ok_or_else(|| format!("expected --flag, got {}", chunk[0]))?;
            if key == "config" {
                config_path = Some(chunk[1].clone());
            } else {
                pairs.push((key.to_string(), chunk[1].clone()));
            }
        }
        let mut opts = Opts::default();
        if let Some(path) = config_path {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| format!("cannot read config {path}: {e}"))?;
            let v: Value =
                serde_json::from_str(&text).map_err(|e| format!("bad JSON in {path}: {e}"))?;
            let map = v.as_object().ok_or("config must be a JSON object")?;
            for (k, val) in map {
                opts.apply(k, val)?;
            }
        }
        for (key, raw) in &pairs {
            // flags arrive as strings; coerce
            let value = match key.as_str() {
                "out" | "r" | "r_list" => Value::String(raw.clone()),
                _ => serde_json::from_str(raw).unwrap_or(Value::String(raw.clone())),
            };
            opts.apply(key, &value)?;
        }
        Ok((command, opts))
    }
}
