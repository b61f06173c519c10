use std::path::PathBuf;
use tdlsm::config::RunConfig;
use tdlsm::operators::OperatorKind;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_configs_parse_and_round_trip() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let cfg = RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.scene().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg, "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 6);
}

#[test]
fn ellipse_file_equals_the_defaults() {
    let mut cfg = RunConfig::load(&configs_dir().join("ellipse.toml")).unwrap();
    cfg.output = RunConfig::default().output;
    assert_eq!(cfg, RunConfig::default());
}

#[test]
fn variants_change_what_they_say() {
    let load = |n: &str| RunConfig::load(&configs_dir().join(n)).unwrap();
    let disks = load("two_disks.toml");
    assert_eq!(disks.scene.obstacles.len(), 2);
    assert_eq!(disks.inversion.operator, OperatorKind::N);
    let ap = load("limited_aperture.toml").scene().unwrap();
    assert!(ap.j() < 15 && ap.m() < 15);
    let rings = load("two_rings.toml").scene().unwrap();
    assert_eq!((rings.j(), rings.m()), (30, 30));
    assert!(load("free_space.toml").scene.obstacles.is_empty());
    assert_eq!(load("kite_beta09.toml").sources.beta, 0.9);
}
