#![no_main]

use std::hint::black_box;

use libfuzzer_sys::fuzz_target;
use varbound::estimators::SamplerLabel;
use varbound::io::DataFormat;
use varbound::optimizer::GradMode;
use varbound::StandardizedBase;

// Command-line values: base, sampler, gradient mode, data format.
fuzz_target!(|text: &str| {
    black_box(text.parse::<StandardizedBase>().ok());
    black_box(text.parse::<SamplerLabel>().ok());
    black_box(text.parse::<GradMode>().ok());
    black_box(text.parse::<DataFormat>().ok());
});
