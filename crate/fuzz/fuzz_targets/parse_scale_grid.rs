#![no_main]

use libfuzzer_sys::fuzz_target;
use loadcouple::analysis::ScaleGrid;

fuzz_target!(|data: &str| {
    if let Ok(grid) = data.parse::<ScaleGrid>() {
        assert!(!grid.0.is_empty());
        assert!(grid.0.iter().all(|s| *s > 0.0 && s.is_finite()));
        assert!(grid.0.windows(2).all(|w| w[0] < w[1]));
    }
});
