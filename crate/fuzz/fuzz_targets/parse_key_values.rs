#![no_main]

use libfuzzer_sys::fuzz_target;
use varbound::io::parse_key_values;

fuzz_target!(|text: &str| {
    let _ = parse_key_values(text);
});
