#![no_main]

use libfuzzer_sys::fuzz_target;
use loadcouple::scenario::ScenarioSpec;

fuzz_target!(|data: &str| {
    if let Ok(spec) = ScenarioSpec::from_toml_str(data) {
        let back = ScenarioSpec::from_toml_str(&spec.to_toml_string()).expect("serialized spec parses");
        assert_eq!(back, spec);
    }
});
