#![no_main]

use fedsim_cli::config::{config_to_toml, parse_config_str};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = parse_config_str(text) {
        if cfg.validate().is_ok() {
            if let Ok(round) = config_to_toml(&cfg) {
                assert_eq!(parse_config_str(&round).unwrap(), cfg);
            }
        }
    }
});
