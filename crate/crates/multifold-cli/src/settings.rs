use std::path::Path;

use multifold::EngineConfig;

/// Reads a flat TOML table of engine settings over the defaults. Unknown
/// keys, wrongly typed values and invalid values are all reported by name.
pub fn load(path: &Path) -> Result<EngineConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<EngineConfig, String> {
    let table: toml::Table = text.parse().map_err(|e| format!("config is not valid TOML: {e}"))?;
    let known = known_keys();
    let mut unknown: Vec<&str> = table.keys().map(String::as_str).filter(|k| !known.iter().any(|n| n == k)).collect();
    unknown.sort_unstable();
    if !unknown.is_empty() {
        return Err(format!("unknown config keys: {}", unknown.join(", ")));
    }
    let mut defaults = toml::Table::try_from(EngineConfig::default()).expect("defaults serialize");
    let mut mistyped = Vec::new();
    for (key, value) in table {
        let expected = &defaults[&key];
        let value = match (expected, value) {
            // integers are fine where reals are expected
            (toml::Value::Float(_), toml::Value::Integer(n)) => toml::Value::Float(n as f64),
            // every integer setting is a count
            (toml::Value::Integer(_), toml::Value::Integer(n)) if n < 0 => {
                mistyped.push(key);
                continue;
            }
            (e, v) if e.same_type(&v) => v,
            _ => {
                mistyped.push(key);
                continue;
            }
        };
        defaults.insert(key, value);
    }
    if !mistyped.is_empty() {
        mistyped.sort_unstable();
        return Err(format!("config keys with the wrong type: {}", mistyped.join(", ")));
    }
    let cfg: EngineConfig = defaults.try_into().map_err(|e| format!("config rejected: {e}"))?;
    check(cfg)
}

/// Fails with the names of every key holding an invalid value.
pub fn check(cfg: EngineConfig) -> Result<EngineConfig, String> {
    let bad = cfg.invalid_keys();
    if bad.is_empty() {
        Ok(cfg)
    } else {
        Err(format!("invalid config values: {}", bad.join(", ")))
    }
}

fn known_keys() -> Vec<String> {
    toml::Table::try_from(EngineConfig::default()).expect("defaults serialize").keys().cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(parse("").unwrap(), EngineConfig::default());
    }

    #[test]
    fn overrides_apply() {
        let cfg = parse("abs_tol = 1e-11\nr1 = 0.25\nnewton_max_iter = 20\nchart_exit_radius = 1\n").err();
        assert_eq!(cfg.unwrap(), "invalid config values: chart_exit_radius");
        let cfg = parse("abs_tol = 1e-11\nr1 = 0.25\nnewton_max_iter = 20\n").unwrap();
        assert_eq!(cfg.integrator.abs_tol, 1e-11);
        assert_eq!(cfg.r1, 0.25);
        assert_eq!(cfg.newton_max_iter, 20);
    }

    #[test]
    fn unknown_and_mistyped_keys_are_named() {
        assert_eq!(parse("zeta = 1\nalpha = 2\nr0 = 0.5").unwrap_err(), "unknown config keys: alpha, zeta");
        assert_eq!(
            parse("r0 = \"wide\"\nnewton_max_iter = 2.5").unwrap_err(),
            "config keys with the wrong type: newton_max_iter, r0"
        );
        assert_eq!(
            parse("newton_max_halvings = -1").unwrap_err(),
            "config keys with the wrong type: newton_max_halvings"
        );
        assert!(parse("[section]\nr0 = 1").unwrap_err().starts_with("unknown config keys: section"));
    }
}
