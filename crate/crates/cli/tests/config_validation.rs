use w2lab::config::ExperimentConfig;
use w2lab::error::CliError;

fn rejection(toml: &str) -> String {
    match ExperimentConfig::from_toml(toml) {
        Err(CliError::ConfigInvalid(msg)) => msg,
        Err(e) => panic!("expected a validation error, got {e}"),
        Ok(_) => panic!("config should have been rejected:\n{toml}"),
    }
}

#[test]
fn defaults_are_valid() {
    let cfg = ExperimentConfig::from_toml("").unwrap();
    assert_eq!(cfg.torus.d, 4);
    assert_eq!(cfg.smoothing.gamma, 4.0);
    assert_eq!(cfg.sim.horizons, vec![1e3, 1e4, 1e5]);
}

#[test]
fn gamma_at_most_three_cites_the_schedule() {
    for g in ["3.0", "2.5"] {
        let msg = rejection(&format!("[smoothing]\ngamma = {g}\n"));
        assert!(msg.contains("ε = (log T)^γ/T"), "{msg}");
        assert!(msg.contains("γ > 3"), "{msg}");
    }
    assert!(ExperimentConfig::from_toml("[smoothing]\ngamma = 3.01\n").is_ok());
}

#[test]
fn coarse_steps_are_rejected() {
    let msg = rejection("[sim]\ndt = 0.05\n[modes]\nlambda_max = 10\n");
    assert!(msg.contains("Euler"), "{msg}");
    assert!(ExperimentConfig::from_toml("[sim]\ndt = 0.01\n[modes]\nlambda_max = 10\n").is_ok());
}

#[test]
fn grid_and_format_guards() {
    assert!(rejection("[ot]\ngrid_n = 12\n").contains("power of two"));
    assert!(rejection("[output]\nformats = [\"xml\"]\n").contains("xml"));
    assert!(rejection("[torus]\nd = 5\n").contains("torus.d"));
    assert!(rejection("[sim]\nreplicas = 0\n").contains("replica"));
}

#[test]
fn unknown_keys_are_parse_errors() {
    assert!(matches!(ExperimentConfig::from_toml("[sim]\nsteps = 3\n"), Err(CliError::ConfigParse(_))));
}

#[test]
fn canonical_json_is_stable() {
    let a = ExperimentConfig::from_toml("[sim]\nseed = 3\nreplicas = 8\n").unwrap();
    let b = ExperimentConfig::from_toml("[sim]\nreplicas = 8\nseed = 3\n").unwrap();
    assert_eq!(a.canonical_json(), b.canonical_json());
    assert_eq!(w2lab::manifest::config_hash(&a), w2lab::manifest::config_hash(&b));
    let c = ExperimentConfig::from_toml("[sim]\nseed = 4\nreplicas = 8\n").unwrap();
    assert_ne!(w2lab::manifest::config_hash(&a), w2lab::manifest::config_hash(&c));
}
