//! Rule-based extraction of a report pair, including wrapped rows,
//! not-measurable and resolved lesions and footnotes.
//!
//! cargo run --example oracle_extraction

use chrono::NaiveDate;
use recist_track::model::{RadiologyReport, ReportPair};
use recist_track::oracle::{extract_pair, OracleConfig};

const BASELINE: &str = "\
Target laesies:
Locatie  Eerdere metingen  Huidig  SE-IMA
Lever segment 4a 42 3-118
Long linkerbovenkwab
    17 4-61

Non-target laesies:
Peritoneale metastasen nm 5-30
";

const FOLLOWUP: &str = "\
Target laesies:
Lever segment 4a* 42 35 3-121
Long linkerbovenkwab 17 -- 4-63
* deels necrotisch

Non-target laesies:
Peritoneale metastasen nm 5-33

Nieuwe laesies:
Bot wervel Th9 12 7-140

Overige bevindingen:
Pleuravocht rechts
";

fn report(uid: &str, date: (i32, u32, u32), body: &str) -> RadiologyReport {
    RadiologyReport {
        patient_id: "DEMO-1".into(),
        study_uid: uid.into(),
        study_date: NaiveDate::from_ymd_opt(date.0, date.1, date.2).expect("valid date"),
        body: body.into(),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pair = ReportPair::new(
        report("1.2.3.1", (2023, 2, 1), BASELINE),
        report("1.2.3.2", (2023, 5, 3), FOLLOWUP),
    )?;
    let extraction = extract_pair(&pair, &OracleConfig::default());
    println!("{}", serde_json::to_string_pretty(&extraction)?);
    Ok(())
}
