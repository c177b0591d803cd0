#![no_main]

use libfuzzer_sys::fuzz_target;
use loadcouple::netmodel::{parse_instance, to_json};

fuzz_target!(|data: &str| {
    let Ok(inst) = parse_instance(data) else {
        return;
    };
    if !inst.validate().is_empty() {
        return;
    }
    let text = to_json(&inst);
    let back = parse_instance(&text).expect("serialized instance parses");
    assert_eq!(to_json(&back), text);
});
