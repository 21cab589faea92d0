#![no_main]

use libfuzzer_sys::fuzz_target;
use varbound::io::parse_table;

fuzz_target!(|text: &str| {
    if let Ok(t) = parse_table(text) {
        let _ = parse_table(&t.to_csv());
    }
});
