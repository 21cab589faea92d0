#![no_main]

use libfuzzer_sys::fuzz_target;
use varbound::io::{parse_dataset, DataFormat, LoadOptions};
use varbound::targets::LabelKind;

fuzz_target!(|text: &str| {
    let mut opts = LoadOptions::new(DataFormat::Libsvm, LabelKind::Binary);
    let _ = parse_dataset(text, &opts);
    opts.features = Some(8);
    opts.labels = LabelKind::Real;
    let _ = parse_dataset(text, &opts);
});
