#![no_main]

use libfuzzer_sys::fuzz_target;
use varbound::io::{parse_trace, write_trace};

fuzz_target!(|text: &str| {
    if let Ok(t) = parse_trace(text) {
        assert_eq!(parse_trace(&write_trace(&t)).expect("re-parse"), t);
    }
});
