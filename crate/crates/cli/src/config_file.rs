//! Flat `key = value` configuration files. Every key is optional and falls
//! back to the built-in defaults; `#` starts a comment; later lines win.

use std::fmt;

use east_sim::{MobilitySchedule, Position, Scheme, SimConfig, TemperatureProcess};

/// Parse failure with the 1-based line it happened on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ParseError {}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, ParseError>
where
    T::Err: fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| err(line, format!("invalid value for {key}: `{value}` ({e})")))
}

/// Parses a whole file on top of the default configuration.
pub fn parse(text: &str) -> Result<SimConfig, ParseError> {
    let mut config = SimConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let content = content.trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(err(line, format!("missing value for {key}")));
        }
        apply(&mut config, key, value, line)?;
    }
    Ok(config)
}

fn apply(config: &mut SimConfig, key: &str, value: &str, line: usize) -> Result<(), ParseError> {
    match key {
        "nodes" => config.nodes = parse_num(line, key, value)?,
        "rounds" => config.rounds = parse_num(line, key, value)?,
        "side" => config.side = parse_num(line, key, value)?,
        "seed" => config.seed = parse_num(line, key, value)?,
        "temp_min" => config.temp_min = parse_num(line, key, value)?,
        "temp_max" => config.temp_max = parse_num(line, key, value)?,
        "band_halfwidth" => config.band_halfwidth = parse_num(line, key, value)?,
        "desired_offset" => config.desired_offset = parse_num(line, key, value)?,
        "repartition_every" => config.repartition_every = parse_num(line, key, value)?,
        "snr_db" => config.snr_db = parse_num(line, key, value)?,
        "scheme" => {
            config.scheme = value
                .parse::<Scheme>()
                .map_err(|e| err(line, e.to_string()))?
        }
        "temp_process" => {
            config.temp_process = match value {
                "static-field" | "static" => TemperatureProcess::StaticField,
                "per-round-jitter" | "jitter" => TemperatureProcess::PerRoundJitter {
                    sigma: match config.temp_process {
                        TemperatureProcess::PerRoundJitter { sigma } => sigma,
                        TemperatureProcess::StaticField => 0.0,
                    },
                },
                other => {
                    return Err(err(
                        line,
                        format!(
                            "unknown temp_process `{other}` (expected static-field or per-round-jitter)"
                        ),
                    ))
                }
            }
        }
        "temp_jitter_sigma" => {
            config.temp_process = TemperatureProcess::PerRoundJitter {
                sigma: parse_num(line, key, value)?,
            }
        }
        "node_step" => {
            config.node_mobility = MobilitySchedule::RandomDisplacement {
                step: parse_num(line, key, value)?,
            }
        }
        "ref_mobility" => {
            config.reference_mobility = match value {
                "static" => MobilitySchedule::Static {
                    pos: match config.reference_mobility {
                        MobilitySchedule::Static { pos } => pos,
                        _ => Position::new(0.0, 0.0),
                    },
                },
                "center" => MobilitySchedule::CenterHold,
                "perimeter" => MobilitySchedule::PerimeterCircuit,
                other => {
                    return Err(err(
                        line,
                        format!(
                            "unknown ref_mobility `{other}` (expected static, center, or perimeter)"
                        ),
                    ))
                }
            }
        }
        "ref_x" | "ref_y" => {
            let v: f64 = parse_num(line, key, value)?;
            let mut pos = match config.reference_mobility {
                MobilitySchedule::Static { pos } => pos,
                _ => Position::new(0.0, 0.0),
            };
            if key == "ref_x" {
                pos.x = v;
            } else {
                pos.y = v;
            }
            config.reference_mobility = MobilitySchedule::Static { pos };
        }
        "eta" => config.radio.eta = parse_num(line, key, value)?,
        "eb_n0_db" => config.radio.eb_n0_db = parse_num(line, key, value)?,
        "bandwidth_hz" => config.radio.bandwidth_hz = parse_num(line, key, value)?,
        "frequency_hz" => config.radio.frequency_hz = parse_num(line, key, value)?,
        "rnf_db" => config.radio.rnf_db = parse_num(line, key, value)?,
        "ambient_kelvin" => config.radio.ambient_kelvin = parse_num(line, key, value)?,
        "boltzmann" => config.radio.boltzmann = parse_num(line, key, value)?,
        "m_factor" => config.radio.m_factor = parse_num(line, key, value)?,
        other => return Err(err(line, format!("unknown key `{other}`"))),
    }
    Ok(())
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_yields_defaults() {
        assert_eq!(parse("").unwrap(), SimConfig::default());
        assert_eq!(parse("# all defaults\n\n").unwrap(), SimConfig::default());
    }

    #[test]
    fn keys_override_defaults() {
        let config = parse("nodes = 50\nrounds=10\nseed = 7\nscheme = classical-per-node\n")
            .unwrap();
        assert_eq!(config.nodes, 50);
        assert_eq!(config.rounds, 10);
        assert_eq!(config.seed, 7);
        assert_eq!(config.scheme, Scheme::ClassicalPerNode);
    }

    #[test]
    fn trailing_comments_are_stripped() {
        let config = parse("rounds = 5 # short smoke run\n").unwrap();
        assert_eq!(config.rounds, 5);
    }

    #[test]
    fn later_lines_win() {
        let config = parse("rounds = 5\nrounds = 9\n").unwrap();
        assert_eq!(config.rounds, 9);
    }

    #[test]
    fn unknown_keys_are_rejected_with_the_line_number() {
        let e = parse("rounds = 5\nbandwith_hz = 1\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("unknown key"), "{e}");
    }

    #[test]
    fn malformed_lines_are_rejected_with_the_line_number() {
        let e = parse("rounds\n").unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse("# fine\nrounds = soon\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("rounds"), "{e}");
        let e = parse("rounds =\n").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(e.message.contains("missing value"), "{e}");
    }

    #[test]
    fn jitter_sigma_switches_the_process_kind() {
        let config = parse("temp_jitter_sigma = 0.5\n").unwrap();
        assert_eq!(
            config.temp_process,
            TemperatureProcess::PerRoundJitter { sigma: 0.5 }
        );
        // Explicit kind after a sigma keeps the sigma.
        let config = parse("temp_jitter_sigma = 0.5\ntemp_process = per-round-jitter\n").unwrap();
        assert_eq!(
            config.temp_process,
            TemperatureProcess::PerRoundJitter { sigma: 0.5 }
        );
        // And switching back to a static field discards it.
        let config = parse("temp_jitter_sigma = 0.5\ntemp_process = static-field\n").unwrap();
        assert_eq!(config.temp_process, TemperatureProcess::StaticField);
    }

    #[test]
    fn reference_coordinates_build_a_static_schedule() {
        let config = parse("ref_x = 30\nref_y = 70\n").unwrap();
        assert_eq!(
            config.reference_mobility,
            MobilitySchedule::Static {
                pos: Position::new(30.0, 70.0)
            }
        );
        // A named schedule later in the file wins over coordinates.
        let config = parse("ref_x = 30\nref_mobility = center\n").unwrap();
        assert_eq!(config.reference_mobility, MobilitySchedule::CenterHold);
    }

    #[test]
    fn node_step_configures_displacement_mobility() {
        let config = parse("node_step = 3.5\n").unwrap();
        assert_eq!(
            config.node_mobility,
            MobilitySchedule::RandomDisplacement { step: 3.5 }
        );
    }

    #[test]
    fn radio_constants_are_reachable() {
        let config = parse("eta = 0.004\nrnf_db = 6\nbandwidth_hz = 2e6\n").unwrap();
        assert_eq!(config.radio.eta, 0.004);
        assert_eq!(config.radio.rnf_db, 6.0);
        assert_eq!(config.radio.bandwidth_hz, 2e6);
    }
}
