use std::path::{Path, PathBuf};
use std::process::Command;

use proptest::prelude::*;
use zklab::config::{CounterexampleSection, EstimateSection, ExperimentConfig, IdentitiesSection, ResonanceSection};
use zklab::harness::estimates::EstimateId;
use zklab::io::file_sha256;
use zklab::runner::Manifest;

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("zklab-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn zklab(out: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_zklab")).env_remove("ZKLAB_OUT").arg("--out").arg(out).args(args).output().unwrap()
}

fn dyadic_list() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec((0u32..9).prop_map(|e| 1u64 << e), 1..5)
}

fn config() -> impl Strategy<Value = ExperimentConfig> {
    (
        any::<u64>(),
        prop::sample::select(EstimateId::ALL.to_vec()),
        dyadic_list(),
        1usize..50,
        prop::collection::vec(0.5f64..0.9, 1..3),
        prop::option::of(prop::collection::vec(-1.0f64..1.0, 1..3)),
        prop::option::of((prop::collection::vec(-1.0f64..1.0, 1..4), dyadic_list())),
        prop::option::of(1usize..5000),
    )
        .prop_map(|(seed, id, n, samples, b, s, ce, ident)| {
            let mut e = EstimateSection::new(id, n, samples);
            e.b = b;
            e.s = s;
            ExperimentConfig {
                seed: Some(seed),
                estimate: vec![e],
                counterexample: ce.map(|(s, n)| CounterexampleSection { s, b: 0.55, n, grid_check: false }),
                identities: ident.map(|samples| IdentitiesSection { samples }),
                resonance: Some(ResonanceSection { samples: 10, n: 8 }),
                ..Default::default()
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips(cfg in config()) {
        let once = ExperimentConfig::parse(&cfg.to_toml()).unwrap();
        prop_assert_eq!(&once, &cfg);
        let twice = ExperimentConfig::parse(&once.to_toml()).unwrap();
        prop_assert_eq!(&twice, &once);
        prop_assert_eq!(ExperimentConfig::parse(&cfg.to_json()).unwrap(), cfg);
    }
}

#[test]
fn manifest_lists_every_csv() {
    let out = scratch("manifest");
    let o = zklab(&out, &["--seed", "3", "counterexample", "--Ns", "4..32"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: Manifest = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let csvs: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    assert!(!csvs.is_empty());
    for c in csvs {
        let entry = m.files.iter().find(|f| f.path == c).unwrap_or_else(|| panic!("{c} missing from manifest"));
        assert_eq!(entry.sha256, file_sha256(&out.join(&c)).unwrap());
    }
}

#[test]
fn exit_codes() {
    let out = scratch("exit");
    assert_eq!(zklab(&out, &["identities", "--samples", "20"]).status.code(), Some(0));
    // empty sweep list
    assert_eq!(zklab(&out, &["l4", "--Ns", ""]).status.code(), Some(2));
    let bad = out.join("bad.cfg");
    std::fs::write(&bad, "seed = 1\n[[estimate]]\nid = \"L4-main\"\nN = []\nsamples = 2\n").unwrap();
    let o = zklab(&out, &["--config", bad.to_str().unwrap(), "run"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("estimate[0].N"));
    std::fs::write(&bad, "[[estimate]]\nid = \"L4-main\"\nN = [4]\nsamples = 2\n").unwrap();
    assert_eq!(zklab(&out, &["--config", bad.to_str().unwrap(), "run"]).status.code(), Some(2));
    // single-cell ensemble with no cells: every row degenerate
    let degen = out.join("degen.cfg");
    std::fs::write(&degen, "seed = 1\n[[estimate]]\nid = \"L4-main\"\nN = [2, 4]\nsamples = 2\nensemble = { law = \"single-shell\", modes = 0, L = 1 }\n").unwrap();
    assert_eq!(zklab(&out, &["--config", degen.to_str().unwrap(), "run"]).status.code(), Some(3));
}

#[test]
fn env_overrides_out() {
    let flag = scratch("flag");
    let env = scratch("env");
    let o = Command::new(env!("CARGO_BIN_EXE_zklab"))
        .env("ZKLAB_OUT", &env)
        .args(["--out", flag.to_str().unwrap(), "identities", "--samples", "5"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(env.join("manifest.json").exists());
    assert!(!flag.join("manifest.json").exists());
}
