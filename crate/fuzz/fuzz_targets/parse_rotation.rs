#![no_main]

use libfuzzer_sys::fuzz_target;
use loadcouple::scenario::Rotation;

fuzz_target!(|data: &str| {
    if let Ok(r) = data.parse::<Rotation>() {
        assert!(r.azimuth_deg.is_finite());
    }
});
