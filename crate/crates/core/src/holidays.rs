//! Holiday lookup tables (`country,date,name` CSV) and conversion to
//! event specs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::features::EventSpec;

/// Environment variable naming a directory searched first for holiday
/// files given by relative name.
pub const HOLIDAY_DIR_ENV: &str = "SILVERKITE_HOLIDAY_DIR";

const BUILTIN_US: &str = include_str!("../data/holidays_us.csv");

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Holiday {
    pub country: String,
    pub date: NaiveDate,
    pub name: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HolidayCalendar {
    entries: Vec<Holiday>,
}

impl HolidayCalendar {
    /// US federal holidays plus Easter Sunday, 2007 through 2030.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_US, "<builtin>").expect("bundled holiday table parses")
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| Error::Config(format!("{origin}: {e}")))?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Config(format!("{origin}: holiday file lacks a `{name}` column")))
        };
        let (ci, di, ni) = (col("country")?, col("date")?, col("name")?);
        let mut entries = Vec::new();
        for (line, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Config(format!("{origin}: {e}")))?;
            let date = NaiveDate::parse_from_str(&rec[di], "%Y-%m-%d")
                .map_err(|_| Error::Config(format!("{origin}: line {}: bad date `{}`", line + 2, &rec[di])))?;
            entries.push(Holiday { country: rec[ci].to_string(), date, name: rec[ni].to_string() });
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Adds entries from `other`, skipping exact duplicates.
    pub fn merge(&mut self, other: HolidayCalendar) {
        self.entries.extend(other.entries);
        self.entries.sort();
        self.entries.dedup();
    }

    pub fn entries(&self) -> &[Holiday] {
        &self.entries
    }

    pub fn countries(&self) -> Vec<String> {
        let mut c: Vec<String> = self.entries.iter().map(|h| h.country.clone()).collect();
        c.sort();
        c.dedup();
        c
    }

    /// One event per holiday name for the given countries (all countries
    /// when empty), in name order.
    pub fn events(&self, countries: &[String], pre_days: u32, post_days: u32) -> Vec<EventSpec> {
        let mut by_name: BTreeMap<&str, Vec<NaiveDate>> = BTreeMap::new();
        for h in &self.entries {
            if countries.is_empty() || countries.iter().any(|c| c.eq_ignore_ascii_case(&h.country)) {
                by_name.entry(&h.name).or_default().push(h.date);
            }
        }
        by_name.into_iter().map(|(name, dates)| EventSpec::new(name, dates, pre_days, post_days)).collect()
    }
}

/// Resolves a holiday file name: absolute paths are used as is; relative
/// names are looked up in `$SILVERKITE_HOLIDAY_DIR` first, then in each
/// of `search`.
pub fn resolve_holiday_file(name: &str, search: &[PathBuf]) -> Option<PathBuf> {
    let p = Path::new(name);
    if p.is_absolute() {
        return p.exists().then(|| p.to_path_buf());
    }
    let env_dir = std::env::var_os(HOLIDAY_DIR_ENV).map(PathBuf::from);
    env_dir.iter().chain(search).map(|d| d.join(p)).find(|c| c.exists())
}
