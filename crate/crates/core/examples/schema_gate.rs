//! Parse, coerce and validate raw model output.
//!
//! cargo run --example schema_gate

use recist_track::gate::parse_and_coerce;

const SAMPLES: [(&str, &str); 4] = [
    (
        "fenced, with a string size",
        "```json\n{\"reports\":[{\"study_uid\":\"1.1\",\"target_lesions\":[{\"label\":\"TL_1_lever\",\"description\":\"lever\",\"current_size_mm\":\"23\",\"se_ima\":\"3-40\",\"note\":null}],\"non_target_lesions\":[],\"new_lesions\":[]},{\"study_uid\":\"1.2\",\"target_lesions\":[],\"non_target_lesions\":[]}]}\n```",
    ),
    (
        "decimal size and unknown field",
        "{\"reports\":[{\"study_uid\":\"1.1\",\"target_lesions\":[{\"label\":\"TL_1_lever\",\"current_size_mm\":23.5,\"confidence\":0.9}],\"non_target_lesions\":[],\"new_lesions\":[]},{\"study_uid\":\"1.2\",\"target_lesions\":[],\"non_target_lesions\":[],\"new_lesions\":[]}]}",
    ),
    (
        "bad locator and wrong prefix",
        "{\"reports\":[{\"study_uid\":\"1.1\",\"target_lesions\":[{\"label\":\"NL_1_lever\",\"se_ima\":\"3/40\"}],\"non_target_lesions\":[],\"new_lesions\":[]},{\"study_uid\":\"1.2\",\"target_lesions\":[],\"non_target_lesions\":[],\"new_lesions\":[]}]}",
    ),
    ("prose", "Ik heb de laesies in de tabel hieronder samengevat."),
];

fn main() {
    for (name, raw) in SAMPLES {
        let result = parse_and_coerce(raw);
        println!(
            "== {name}: {}",
            if result.is_ok() {
                "accepted"
            } else {
                "rejected"
            }
        );
        for c in &result.coercions_applied {
            println!("   coerced: {c}");
        }
        for v in result.violations() {
            println!("   violation: {v}");
        }
    }
}
