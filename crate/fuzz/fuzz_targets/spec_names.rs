#![no_main]
//! Name parsers used on the command line; accepted names print back to
//! something that parses to the same value.

use flmgof::regfit::{EstimatorKind, LambdaPolicy};
use flmgof::simgen::{HypothesisSpec, Process, Scenario, TestKind};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if s.len() > 256 {
        return;
    }
    if let Ok(h) = s.parse::<HypothesisSpec>() {
        assert_eq!(h.code().parse::<HypothesisSpec>().unwrap(), h);
    }
    if let Ok(k) = s.parse::<EstimatorKind>() {
        assert_eq!(k.name().parse::<EstimatorKind>().unwrap(), k);
    }
    if let Ok(sc) = s.parse::<Scenario>() {
        assert_eq!(sc.name().parse::<Scenario>().unwrap(), sc);
    }
    if let Ok(t) = s.parse::<TestKind>() {
        assert_eq!(t.name().parse::<TestKind>().unwrap(), t);
    }
    if let Ok(l) = s.parse::<LambdaPolicy>() {
        assert_eq!(l.to_string().parse::<LambdaPolicy>().unwrap(), l);
    }
    let _ = s.parse::<Process>();
});
