//! Versioned local data sets behind the media-bias and country-freedom
//! providers.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use super::services::{CountryFreedom, FreedomStatus, MediaBiasRecord};
use super::{Provider, ProviderError, ProviderId, ProviderReply, ProviderRequest};

const BUNDLED_MEDIA_BIAS: &str = include_str!("../../data/media_bias.tsv");
const BUNDLED_COUNTRIES: &str = include_str!("../../data/country_freedom.json");

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{file}:{line}: {reason}")]
    Parse { file: String, line: usize, reason: String },
    #[error("reading {0}: {1}")]
    Io(String, std::io::Error),
}

const COLUMNS: [&str; 9] = [
    "domain",
    "country",
    "source_type",
    "outlet_type",
    "coverage_scope",
    "political_bias",
    "factual_reporting",
    "credibility_rating",
    "propaganda_association",
];

#[derive(Debug, Clone, Default)]
pub struct MediaBiasTable {
    rows: HashMap<String, MediaBiasRecord>,
}

impl MediaBiasTable {
    pub fn bundled() -> Self {
        Self::parse_tsv(BUNDLED_MEDIA_BIAS, "media_bias.tsv").expect("bundled media bias table is valid")
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = fs::read_to_string(path).map_err(|e| DataError::Io(path.display().to_string(), e))?;
        Self::parse_tsv(&text, &path.display().to_string())
    }

    pub fn parse_tsv(text: &str, file: &str) -> Result<Self, DataError> {
        let err = |line: usize, reason: String| DataError::Parse { file: file.to_string(), line, reason };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let (_, header) = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
        let header: Vec<&str> = header.split('\t').map(str::trim).collect();
        if header != COLUMNS {
            return Err(err(1, format!("unexpected header {header:?}")));
        }
        let mut rows = HashMap::new();
        for (idx, line) in lines {
            let cells: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cells.len() != COLUMNS.len() {
                return Err(err(idx + 1, format!("expected {} columns, got {}", COLUMNS.len(), cells.len())));
            }
            let opt = |s: &str| Some(s.to_string()).filter(|s| !s.is_empty());
            let req = |i: usize| -> Result<String, DataError> {
                opt(cells[i]).ok_or_else(|| err(idx + 1, format!("empty {}", COLUMNS[i])))
            };
            let record = MediaBiasRecord {
                domain: req(0)?.to_ascii_lowercase(),
                country: opt(cells[1]),
                source_type: req(2)?,
                outlet_type: req(3)?,
                coverage_scope: req(4)?,
                political_bias: req(5)?,
                factual_reporting: opt(cells[6]),
                credibility_rating: opt(cells[7]),
                propaganda_association: req(8)?,
            };
            rows.insert(record.domain.clone(), record);
        }
        Ok(Self { rows })
    }

    /// Exact host match, then parent domains (`news.example.com` falls back
    /// to `example.com`).
    pub fn get(&self, domain: &str) -> Option<&MediaBiasRecord> {
        let domain = domain.trim().to_ascii_lowercase();
        let mut candidate = domain.strip_prefix("www.").unwrap_or(&domain);
        loop {
            if let Some(r) = self.rows.get(candidate) {
                return Some(r);
            }
            match candidate.split_once('.') {
                Some((_, rest)) if rest.contains('.') => candidate = rest,
                _ => return None,
            }
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Deserialize)]
struct CountryFile {
    #[allow(dead_code)]
    version: String,
    countries: Vec<CountryRow>,
}

#[derive(Debug, Deserialize)]
struct CountryRow {
    country: String,
    #[serde(default)]
    aliases: Vec<String>,
    score: i64,
    #[serde(default)]
    status: Option<FreedomStatus>,
}

#[derive(Debug, Clone, Default)]
pub struct CountryFreedomTable {
    rows: Vec<CountryFreedom>,
    index: HashMap<String, usize>,
}

impl CountryFreedomTable {
    pub fn bundled() -> Self {
        Self::parse_json(BUNDLED_COUNTRIES, "country_freedom.json").expect("bundled country table is valid")
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = fs::read_to_string(path).map_err(|e| DataError::Io(path.display().to_string(), e))?;
        Self::parse_json(&text, &path.display().to_string())
    }

    pub fn parse_json(text: &str, file: &str) -> Result<Self, DataError> {
        let parsed: CountryFile = serde_json::from_str(text).map_err(|e| DataError::Parse {
            file: file.to_string(),
            line: e.line(),
            reason: e.to_string(),
        })?;
        let mut table = Self::default();
        for (i, row) in parsed.countries.into_iter().enumerate() {
            let score = u8::try_from(row.score).ok().filter(|s| *s <= 100).ok_or_else(|| DataError::Parse {
                file: file.to_string(),
                line: 0,
                reason: format!("{}: score {} outside 0..=100", row.country, row.score),
            })?;
            let status = row.status.unwrap_or_else(|| FreedomStatus::from_score(score));
            for name in std::iter::once(&row.country).chain(row.aliases.iter()) {
                table.index.insert(name.trim().to_lowercase(), i);
            }
            table.rows.push(CountryFreedom { country: row.country, score, status });
        }
        Ok(table)
    }

    pub fn get(&self, country: &str) -> Option<&CountryFreedom> {
        self.index.get(&country.trim().to_lowercase()).map(|&i| &self.rows[i])
    }

    pub fn rows(&self) -> &[CountryFreedom] {
        &self.rows
    }
}

/// Serves media-bias and country-freedom requests from local tables.
#[derive(Debug, Clone, Default)]
pub struct LocalDataProvider {
    pub media_bias: MediaBiasTable,
    pub countries: CountryFreedomTable,
}

impl LocalDataProvider {
    pub fn bundled() -> Self {
        Self { media_bias: MediaBiasTable::bundled(), countries: CountryFreedomTable::bundled() }
    }
}

impl Provider for LocalDataProvider {
    fn call(&self, req: &ProviderRequest) -> Result<ProviderReply, ProviderError> {
        let field = |name: &str| {
            req.payload
                .get(name)
                .and_then(Value::as_str)
                .ok_or_else(|| ProviderError::Malformed(format!("missing {name:?}")))
        };
        let payload = match req.provider {
            ProviderId::MediaBiasLookup => match self.media_bias.get(field("domain")?) {
                Some(r) => serde_json::to_value(r).map_err(|e| ProviderError::Malformed(e.to_string()))?,
                None => Value::Null,
            },
            ProviderId::CountryFreedomLookup => match self.countries.get(field("country")?) {
                Some(r) => json!(r),
                None => Value::Null,
            },
            other => return Err(ProviderError::Unavailable(format!("local data cannot serve {other}"))),
        };
        Ok(ProviderReply::new(payload))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_tables_load() {
        let bias = MediaBiasTable::bundled();
        assert!(bias.len() >= 10);
        let x = bias.get("x.com").unwrap();
        assert_eq!(x.country.as_deref(), Some("United States"));
        assert_eq!(x.factual_reporting, None);
        assert!(bias.get("www.snopes.com").is_some());
        assert!(bias.get("edition.bbc.com").is_some());
        assert!(bias.get("example.org").is_none());
    }

    #[test]
    fn every_country_score_is_bounded() {
        let table = CountryFreedomTable::bundled();
        assert!(!table.rows().is_empty());
        for row in table.rows() {
            assert!(row.score <= 100, "{row:?}");
        }
        assert_eq!(table.get("USA").unwrap().score, 83);
    }

    #[test]
    fn out_of_range_scores_are_rejected() {
        let bad = r#"{"version":"t","countries":[{"country":"Nowhere","score":140}]}"#;
        assert!(CountryFreedomTable::parse_json(bad, "t.json").is_err());
        let inferred = r#"{"version":"t","countries":[{"country":"Somewhere","score":50}]}"#;
        let t = CountryFreedomTable::parse_json(inferred, "t.json").unwrap();
        assert_eq!(t.get("somewhere").unwrap().status, FreedomStatus::PartlyFree);
    }

    #[test]
    fn malformed_tsv_rows_fail() {
        let text = format!("{}\nx.com\tUS\n", COLUMNS.join("\t"));
        assert!(MediaBiasTable::parse_tsv(&text, "t.tsv").is_err());
    }
}
