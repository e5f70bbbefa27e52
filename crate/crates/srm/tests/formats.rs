use proptest::prelude::*;
use serde_json::{json, Map};
use srm::config::SnapshotFormat;
use srm::snapshot::{Particles, SnapshotFile};
use srm_core::engine::{Snapshot, SrmParams};
use srm_core::platelet::Spherodisk;
use srm_core::{PeriodicBox, Sphere};

fn params() -> Map<String, serde_json::Value> {
    let mut m = Map::new();
    m.insert("swelling_rate".into(), json!(0.1 + 0.2));
    m.insert("note".into(), json!("a,b\n\"c\""));
    m
}

fn disk_file(ps: Vec<Sphere<2>>, seed: u64) -> SnapshotFile {
    let bx = PeriodicBox::new([1.0, 0.7]).unwrap();
    let snap = Snapshot::new(bx, ps.clone(), SrmParams::default(), seed);
    SnapshotFile::new(&snap, Particles::Disks(ps), seed, params())
}

fn platelet_file(ps: Vec<Spherodisk>) -> SnapshotFile {
    let bx = PeriodicBox::cube(3.0).unwrap();
    let snap = Snapshot::new(bx, ps.clone(), SrmParams::default(), 7);
    SnapshotFile::new(&snap, Particles::Platelets(ps), 7, params())
}

fn assert_round_trip(file: &SnapshotFile) {
    for format in [SnapshotFormat::Text, SnapshotFormat::Binary] {
        let bytes = file.encode(format);
        let (back, detected) = SnapshotFile::decode(&bytes).unwrap();
        assert_eq!(detected, format);
        assert_eq!(&back, file);
        assert_eq!(back.encode(format), bytes);
    }
}

fn coord() -> impl Strategy<Value = f64> {
    prop_oneof![0.0f64..1.0, Just(0.0), Just(f64::MIN_POSITIVE), Just(1.0 - f64::EPSILON / 2.0), Just(0.1 + 0.2)]
}

proptest! {
    #[test]
    fn disks_round_trip_bit_exactly(
        rows in prop::collection::vec((coord(), coord(), 1e-300f64..0.5), 1..40),
        seed in any::<u64>(),
    ) {
        let ps = rows.iter().enumerate().map(|(i, &(x, y, r))| Sphere::new(i as u32, [x, 0.7 * y], r)).collect();
        assert_round_trip(&disk_file(ps, seed));
    }

    #[test]
    fn platelets_round_trip_bit_exactly(
        rows in prop::collection::vec(((coord(), coord(), coord()), (-1.0f64..1.0, -1.0f64..1.0, 0.1f64..1.0), 1.0f64..2.0, 0.001f64..0.5), 1..20),
    ) {
        let ps = rows
            .iter()
            .enumerate()
            .map(|(i, &((x, y, z), (a, b, c), d, t))| {
                let n = (a * a + b * b + c * c).sqrt();
                Spherodisk::new(i as u32, [3.0 * x, 3.0 * y, 3.0 * z], [a / n, b / n, c / n], d, t.min(d)).unwrap()
            })
            .collect();
        assert_round_trip(&platelet_file(ps));
    }
}

#[test]
fn spheres_round_trip_through_files() {
    let bx = PeriodicBox::new([1.0, 2.0, 3.0]).unwrap();
    let ps: Vec<Sphere<3>> = (0..10).map(|i| Sphere::new(i, [0.1 * f64::from(i), 0.3, 2.9], 0.01 + 1e-17 * f64::from(i))).collect();
    let snap = Snapshot::new(bx, ps.clone(), SrmParams::default(), u64::MAX);
    let file = SnapshotFile::new(&snap, Particles::Spheres(ps), u64::MAX, params());
    assert_round_trip(&file);
    let dir = tempfile::tempdir().unwrap();
    for (name, format) in [("a.srm", SnapshotFormat::Text), ("a.srmb", SnapshotFormat::Binary)] {
        let path = dir.path().join(name);
        file.write(&path, format).unwrap();
        let first = std::fs::read(&path).unwrap();
        let (back, _) = SnapshotFile::read(&path).unwrap();
        back.write(&path, format).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
    }
}

#[test]
fn text_header_is_one_json_line_then_columns() {
    let file = disk_file(vec![Sphere::new(0, [0.25, 0.5], 0.125)], 3);
    let text = String::from_utf8(file.to_text()).unwrap();
    let mut lines = text.lines();
    let header: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(header["shape"], "disk");
    assert_eq!(header["count"], 1);
    assert_eq!(lines.next(), Some("id,x,y,r"));
    assert_eq!(lines.next(), Some("0,0.25,0.5,0.125"));
    assert_eq!(lines.next(), None);
}

#[test]
fn malformed_files_are_rejected() {
    let file = disk_file(vec![Sphere::new(0, [0.25, 0.5], 0.125), Sphere::new(1, [0.75, 0.5], 0.125)], 3);
    let text = String::from_utf8(file.to_text()).unwrap();
    for bad in [
        text.replace("id,x,y,r", "id,x,y"),
        text.replace("0,0.25,0.5,0.125", "0,0.25,0.5"),
        text.replace("0,0.25,0.5,0.125", "0,0.25,0.5,-0.125"),
        text.replace("\"count\":2", "\"count\":3"),
        text.lines().take(3).collect::<Vec<_>>().join("\n"),
        String::new(),
    ] {
        assert!(SnapshotFile::decode(bad.as_bytes()).is_err(), "{bad}");
    }
    let bin = file.to_binary();
    assert!(SnapshotFile::decode(&bin[..bin.len() - 1]).is_err());
    let mut extra = bin.clone();
    extra.push(0);
    assert!(SnapshotFile::decode(&extra).is_err());
}

#[test]
fn audit_finds_planted_overlap() {
    let ok = disk_file(vec![Sphere::new(0, [0.05, 0.5], 0.05), Sphere::new(1, [0.95, 0.5], 0.05)], 1);
    assert!(ok.audit(1e-12).unwrap().is_empty());
    let bad = disk_file(vec![Sphere::new(0, [0.05, 0.5], 0.05), Sphere::new(1, [0.951, 0.5], 0.05)], 1);
    let found = bad.audit(1e-12).unwrap();
    assert_eq!(found.len(), 1);
    assert_eq!((found[0].0, found[0].1), (0, 1));
}
