#![no_main]
//! Surface CSV reader and bilinear resampling.

use flmgof::fdata::Grid;
use flmgof::io::{read_surface, write_surface};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() > 64 * 1024 {
        return;
    }
    let Ok(surface) = read_surface(data) else { return };
    assert_eq!(surface.values.shape(), (surface.s.len(), surface.t.len()));

    let mut out = Vec::new();
    write_surface(&mut out, &surface, &[]).expect("writing to memory");
    assert_eq!(read_surface(out.as_slice()).expect("own output parses"), surface);

    // resampling never leaves the range of the input values
    let (gs, gt) = (Grid::equispaced(0.0, 1.0, 7).unwrap(), Grid::equispaced(-1.0, 2.0, 5).unwrap());
    if let Ok(r) = surface.resample(&gs, &gt) {
        let lo = surface.values.min();
        let hi = surface.values.max();
        let slack = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
        assert!(r.iter().all(|v| *v >= lo - slack && *v <= hi + slack));
    }
});
