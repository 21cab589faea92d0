#![no_main]

use libfuzzer_sys::fuzz_target;
use varbound::io::{parse_dataset, write_csv, DataFormat, LoadOptions};
use varbound::targets::LabelKind;

fuzz_target!(|text: &str| {
    let opts = LoadOptions::new(DataFormat::Csv, LabelKind::Real);
    if let Ok(ds) = parse_dataset(text, &opts) {
        // whatever parses must survive a write/parse round trip
        let back = parse_dataset(&write_csv(&ds), &opts).expect("re-parse");
        assert_eq!(back, ds);
    }
    let mut opts = LoadOptions::new(DataFormat::Csv, LabelKind::Binary);
    opts.add_intercept = true;
    opts.standardize = true;
    let _ = parse_dataset(text, &opts);
});
