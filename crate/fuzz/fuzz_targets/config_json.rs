#![no_main]

use libfuzzer_sys::fuzz_target;
use qmelab_cli::settings::Experiment;
use qmelab_cli::Settings;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(settings) = Settings::from_json(text) {
        let _ = settings.hash();
        let _ = settings.resolve(Experiment::Mmd, None);
    }
});
