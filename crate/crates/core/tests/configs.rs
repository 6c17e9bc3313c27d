//! The shipped configuration files parse and describe what they claim to.

use std::path::{Path, PathBuf};

use hstm::eval::search::{HstmSpaceFile, StlmSpaceFile};
use hstm::eval::{HstmSpace, SearchSpace, StlmSpace};
use hstm::features::FeatureKind;
use hstm::models::config::read_json;
use hstm::models::{HstmConfig, StlmConfig};

fn cfg(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn districts(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("D{i:02}")).collect()
}

#[test]
fn west_bengal_stlm_table() {
    let c: StlmConfig = read_json(&cfg("west_bengal_stlm.json")).unwrap();
    assert_eq!(c.params.districts.len(), 19);
    let b = c.params.get("BANKURA").unwrap();
    assert_eq!((b.p, b.k, b.q, b.epochs), (120, 4, 2, 60));
    assert_eq!(b.hidden_units, [8, 4]);
    assert_eq!((b.learning_rate, b.l1_alpha), (1e-4, 1e-5));
    assert_eq!(c.training.batch_size, 32);
    for p in c.params.districts.values() {
        p.validate(19).unwrap();
    }
}

#[test]
fn west_bengal_hstm_table() {
    let c: HstmConfig = read_json(&cfg("west_bengal_hstm.json")).unwrap();
    let s1 = c.stage1_array().unwrap();
    assert_eq!(s1[FeatureKind::MonsoonTotal.index()].lambda, 5e-2);
    assert_eq!(s1[FeatureKind::Entropy.index()].lambda, 5e-3);
    assert_eq!(s1[FeatureKind::Total.index()].p, 11);
    assert_eq!(c.stage2.districts.len(), 19);
    assert_eq!(c.stage2.get("MALDA").unwrap().k, 7);
    for p in &s1 {
        p.validate(19).unwrap();
    }
}

#[test]
fn search_spaces_build_for_nineteen_districts() {
    let s: StlmSpaceFile = read_json(&cfg("search_space_stlm.json")).unwrap();
    let space = StlmSpace::new(&s, districts(19), 0).unwrap();
    assert_eq!(space.dims().len(), 19 * 7);
    assert_eq!(s.district.hidden_units.len(), 81);
    let h: HstmSpaceFile = read_json(&cfg("search_space_hstm.json")).unwrap();
    let space = HstmSpace::new(&h, districts(19), 0).unwrap();
    assert_eq!(space.dims().len(), 9 * 6 + 19 * 7);
    assert_eq!(h.stage1.lambda, [1e-4, 1e-3, 5e-3, 1e-2, 5e-2, 1e-1]);
    // on a small panel the neighbour counts are trimmed to what exists
    let small = HstmSpace::new(&h, districts(3), 0).unwrap();
    assert!(small.stage1.k.iter().chain(&small.stage2.k).all(|k| *k < 3));
}

#[test]
fn synthetic_spaces_build() {
    let s: StlmSpaceFile = read_json(&cfg("synthetic_space_stlm.json")).unwrap();
    StlmSpace::new(&s, districts(6), 0).unwrap();
    let h: HstmSpaceFile = read_json(&cfg("synthetic_space_hstm.json")).unwrap();
    HstmSpace::new(&h, districts(6), 0).unwrap();
}
