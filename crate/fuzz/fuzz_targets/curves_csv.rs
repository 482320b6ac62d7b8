#![no_main]
//! Curve CSV reader: no panics, and anything accepted survives a write/read cycle.

use flmgof::io::{read_curves, write_curves};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() > 64 * 1024 {
        return;
    }
    let Ok(sample) = read_curves(data, None) else { return };
    assert!(sample.n() > 0 && sample.m() >= 2);
    assert!(sample.values().iter().all(|v| v.is_finite()));

    let mut out = Vec::new();
    write_curves(&mut out, &sample, &[]).expect("writing to memory");
    let back = read_curves(out.as_slice(), None).expect("own output parses");
    assert_eq!(back.values(), sample.values());
    assert_eq!(back.grid().nodes(), sample.grid().nodes());
});
