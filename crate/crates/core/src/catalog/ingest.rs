//! Source-specific catalog adapters.
//!
//! A [`ColumnMapping`] describes where a CSV or JSON export keeps the fields
//! of a product. Every input row yields either one [`ProductRecord`] or one
//! [`Rejection`]; nothing is dropped silently.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{product_id, DatabaseSource, MarketShare, ProductRecord, Stage, StageShare};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("catalog file not found: {0}")]
    MissingFile(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("mapping references column `{column}` which is absent from the catalog")]
    AbsentColumn { column: String },
    #[error("invalid column mapping: {0}")]
    InvalidMapping(String),
    #[error("malformed CSV header: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed JSON catalog: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReferenceQuantity {
    Fixed { grams: f64 },
    Column { column: String },
}

impl Default for ReferenceQuantity {
    fn default() -> Self {
        ReferenceQuantity::Fixed { grams: super::REFERENCE_GRAMS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StageColumns {
    Impact(String),
    WithPercentage { impact: String, percentage: Option<String> },
}

impl StageColumns {
    fn impact(&self) -> &str {
        match self {
            StageColumns::Impact(c) => c,
            StageColumns::WithPercentage { impact, .. } => impact,
        }
    }

    fn percentage(&self) -> Option<&str> {
        match self {
            StageColumns::Impact(_) => None,
            StageColumns::WithPercentage { percentage, .. } => percentage.as_deref(),
        }
    }
}

/// Where market shares live in a row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MarketShareColumns {
    /// JSON only: an array of objects under `field`.
    Nested {
        field: String,
        region: String,
        share_pct: String,
        emissions: Option<String>,
    },
    /// One cell encoded as `REGION:share[:emissions];...`.
    Encoded { column: String },
}

/// Declares which columns of a source export hold each product field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMapping {
    #[serde(default)]
    pub format: CatalogFormat,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    pub name: String,
    #[serde(default)]
    pub region: Option<String>,
    #[serde(default)]
    pub default_region: Option<String>,
    #[serde(default)]
    pub total_impact: Option<String>,
    #[serde(default)]
    pub reference_quantity: ReferenceQuantity,
    #[serde(default)]
    pub quality_rating: Option<String>,
    #[serde(default)]
    pub stages: BTreeMap<Stage, StageColumns>,
    #[serde(default)]
    pub market_shares: Option<MarketShareColumns>,
}

fn default_delimiter() -> char {
    ','
}

impl ColumnMapping {
    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let text = read(path)?;
        serde_json::from_str(&text).map_err(|e| IngestError::InvalidMapping(format!("{}: {e}", path.display())))
    }

    fn check(&self, source: DatabaseSource) -> Result<(), IngestError> {
        if self.region.is_none() && self.default_region.is_none() {
            return Err(IngestError::InvalidMapping("either `region` or `default_region` is required".into()));
        }
        if self.total_impact.is_none() && self.market_shares.is_none() {
            return Err(IngestError::InvalidMapping(
                "mapping declares neither `total_impact` nor `market_shares`".into(),
            ));
        }
        if let Some(stage) = self.stages.keys().find(|s| !s.allowed_for(source)) {
            return Err(IngestError::InvalidMapping(format!("stage {stage:?} is not reported by {source}")));
        }
        if let ReferenceQuantity::Fixed { grams } = self.reference_quantity {
            if !(grams > 0.0) {
                return Err(IngestError::InvalidMapping("reference quantity must be positive".into()));
            }
        }
        if !self.delimiter.is_ascii() {
            return Err(IngestError::InvalidMapping("delimiter must be a single ASCII character".into()));
        }
        if self.format == CatalogFormat::Csv && matches!(self.market_shares, Some(MarketShareColumns::Nested { .. })) {
            return Err(IngestError::InvalidMapping("nested market shares need the json format".into()));
        }
        Ok(())
    }

    /// Top-level columns the mapping reads.
    fn columns(&self) -> Vec<&str> {
        let mut cols = vec![self.name.as_str()];
        cols.extend(self.region.as_deref());
        cols.extend(self.total_impact.as_deref());
        cols.extend(self.quality_rating.as_deref());
        if let ReferenceQuantity::Column { column } = &self.reference_quantity {
            cols.push(column);
        }
        for stage in self.stages.values() {
            cols.push(stage.impact());
            cols.extend(stage.percentage());
        }
        match &self.market_shares {
            Some(MarketShareColumns::Nested { field, .. }) => cols.push(field),
            Some(MarketShareColumns::Encoded { column }) => cols.push(column),
            None => {}
        }
        cols
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    /// 1-based data row (header excluded).
    pub row: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionReport {
    pub source: DatabaseSource,
    pub input: String,
    pub rows: usize,
    pub accepted: usize,
    pub rejections: Vec<Rejection>,
}

#[derive(Debug, Clone)]
pub struct LoadOutcome {
    pub records: Vec<ProductRecord>,
    pub report: RejectionReport,
}

/// Parses one catalog export into normalized per-100 g records.
pub fn load_catalog(source: DatabaseSource, path: &Path, mapping: &ColumnMapping) -> Result<LoadOutcome, IngestError> {
    let text = read(path)?;
    load_catalog_str(source, &text, mapping, &path.display().to_string())
}

pub fn load_catalog_str(
    source: DatabaseSource,
    text: &str,
    mapping: &ColumnMapping,
    input: &str,
) -> Result<LoadOutcome, IngestError> {
    mapping.check(source)?;
    let mut out = Builder::new(source, input);
    if text.trim().is_empty() {
        return Ok(out.finish());
    }
    match mapping.format {
        CatalogFormat::Csv => load_csv(text, mapping, &mut out)?,
        CatalogFormat::Json => load_json(text, mapping, &mut out)?,
    }
    Ok(out.finish())
}

fn read(path: &Path) -> Result<String, IngestError> {
    if !path.exists() {
        return Err(IngestError::MissingFile(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })
}

struct Builder {
    source: DatabaseSource,
    input: String,
    rows: usize,
    records: Vec<ProductRecord>,
    rejections: Vec<Rejection>,
}

impl Builder {
    fn new(source: DatabaseSource, input: &str) -> Self {
        Builder { source, input: input.to_string(), rows: 0, records: Vec::new(), rejections: Vec::new() }
    }

    fn push(&mut self, outcome: Result<ProductRecord, RowError>) {
        self.rows += 1;
        match outcome {
            Ok(rec) => self.records.push(rec),
            Err(e) => self.rejections.push(Rejection { row: self.rows, name: e.name, reason: e.reason }),
        }
    }

    fn finish(self) -> LoadOutcome {
        let report = RejectionReport {
            source: self.source,
            input: self.input,
            rows: self.rows,
            accepted: self.records.len(),
            rejections: self.rejections,
        };
        LoadOutcome { records: self.records, report }
    }
}

struct RowError {
    name: Option<String>,
    reason: String,
}

impl RowError {
    fn new(reason: impl Into<String>) -> Self {
        RowError { name: None, reason: reason.into() }
    }
}

enum Cell<'a> {
    Missing,
    Text(Cow<'a, str>),
    Number(f64),
    List(&'a [Value]),
}

trait Row {
    fn cell(&self, column: &str) -> Cell<'_>;
}

struct CsvRow<'a> {
    headers: &'a HashMap<String, usize>,
    record: &'a csv::StringRecord,
}

impl Row for CsvRow<'_> {
    fn cell(&self, column: &str) -> Cell<'_> {
        match self.headers.get(column).and_then(|&i| self.record.get(i)) {
            Some(s) if !s.trim().is_empty() => Cell::Text(Cow::Borrowed(s)),
            _ => Cell::Missing,
        }
    }
}

impl Row for serde_json::Map<String, Value> {
    fn cell(&self, column: &str) -> Cell<'_> {
        match self.get(column) {
            None | Some(Value::Null) => Cell::Missing,
            Some(Value::Number(n)) => n.as_f64().map(Cell::Number).unwrap_or(Cell::Missing),
            Some(Value::String(s)) if s.trim().is_empty() => Cell::Missing,
            Some(Value::String(s)) => Cell::Text(Cow::Borrowed(s)),
            Some(Value::Array(items)) => Cell::List(items),
            Some(other) => Cell::Text(Cow::Owned(other.to_string())),
        }
    }
}

fn load_csv(text: &str, mapping: &ColumnMapping, out: &mut Builder) -> Result<(), IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(mapping.delimiter as u8)
        .trim(csv::Trim::Headers)
        .from_reader(text.as_bytes());
    let headers: HashMap<String, usize> =
        reader.headers()?.iter().enumerate().map(|(i, h)| (h.to_string(), i)).collect();
    if let Some(col) = mapping.columns().into_iter().find(|c| !headers.contains_key(*c)) {
        return Err(IngestError::AbsentColumn { column: col.to_string() });
    }
    for result in reader.records() {
        let outcome = match result {
            Ok(record) => build_record(out.source, &CsvRow { headers: &headers, record: &record }, mapping),
            Err(e) => Err(RowError::new(format!("malformed row: {e}"))),
        };
        out.push(outcome);
    }
    Ok(())
}

fn load_json(text: &str, mapping: &ColumnMapping, out: &mut Builder) -> Result<(), IngestError> {
    let value: Value = serde_json::from_str(text)?;
    let items = match value {
        Value::Array(items) => items,
        _ => return Err(IngestError::InvalidMapping("JSON catalog must be an array of objects".into())),
    };
    let present = |col: &str| items.iter().any(|it| it.as_object().is_some_and(|o| o.contains_key(col)));
    if !items.is_empty() {
        if let Some(col) = mapping.columns().into_iter().find(|c| !present(c)) {
            return Err(IngestError::AbsentColumn { column: col.to_string() });
        }
    }
    for item in &items {
        let outcome = match item.as_object() {
            Some(obj) => build_record(out.source, obj, mapping),
            None => Err(RowError::new("catalog entry is not an object")),
        };
        out.push(outcome);
    }
    Ok(())
}

fn text_of(cell: Cell<'_>) -> Option<String> {
    match cell {
        Cell::Text(s) => Some(s.trim().to_string()),
        Cell::Number(n) => Some(n.to_string()),
        Cell::Missing | Cell::List(_) => None,
    }
}

fn parse_number(raw: &str) -> Option<f64> {
    let raw = raw.trim();
    let value = match raw.parse::<f64>() {
        Ok(v) => v,
        // decimal comma, as in French exports
        Err(_) if raw.matches(',').count() == 1 && !raw.contains('.') => raw.replace(',', ".").parse().ok()?,
        Err(_) => return None,
    };
    value.is_finite().then_some(value)
}

fn number(row: &dyn Row, column: &str) -> Result<Option<f64>, RowError> {
    match row.cell(column) {
        Cell::Missing => Ok(None),
        Cell::Number(n) => Ok(Some(n)),
        Cell::Text(s) => parse_number(&s)
            .map(Some)
            .ok_or_else(|| RowError::new(format!("non-numeric value `{s}` in column `{column}`"))),
        Cell::List(_) => Err(RowError::new(format!("column `{column}` holds a list, expected a number"))),
    }
}

fn non_negative(value: Option<f64>, column: &str) -> Result<Option<f64>, RowError> {
    match value {
        Some(v) if v < 0.0 => Err(RowError::new(format!("negative impact {v} in column `{column}`"))),
        other => Ok(other),
    }
}

fn build_record(source: DatabaseSource, row: &dyn Row, mapping: &ColumnMapping) -> Result<ProductRecord, RowError> {
    let name = text_of(row.cell(&mapping.name)).unwrap_or_default();
    if name.is_empty() {
        return Err(RowError::new("empty product name"));
    }
    build_named(source, row, mapping, &name).map_err(|mut e| {
        e.name = Some(name.clone());
        e
    })
}

fn build_named(
    source: DatabaseSource,
    row: &dyn Row,
    mapping: &ColumnMapping,
    name: &str,
) -> Result<ProductRecord, RowError> {
    let region = mapping
        .region
        .as_deref()
        .and_then(|c| text_of(row.cell(c)))
        .or_else(|| mapping.default_region.clone())
        .map(|r| crate::region::normalize(&r))
        .filter(|r| !r.is_empty())
        .ok_or_else(|| RowError::new("missing region"))?;

    let reference_quantity_g = match &mapping.reference_quantity {
        ReferenceQuantity::Fixed { grams } => *grams,
        ReferenceQuantity::Column { column } => {
            number(row, column)?.ok_or_else(|| RowError::new(format!("missing reference quantity in `{column}`")))?
        }
    };
    if !(reference_quantity_g > 0.0) {
        return Err(RowError::new(format!("reference quantity {reference_quantity_g} is not positive")));
    }

    let total_impact = match &mapping.total_impact {
        Some(col) => non_negative(number(row, col)?, col)?,
        None => None,
    };
    let quality_rating = match &mapping.quality_rating {
        Some(col) => number(row, col)?,
        None => None,
    };

    let mut stage_breakdown = Vec::new();
    for (&stage, cols) in &mapping.stages {
        let Some(impact) = non_negative(number(row, cols.impact())?, cols.impact())? else {
            continue;
        };
        let given = match cols.percentage() {
            Some(col) => number(row, col)?,
            None => None,
        };
        let percentage = match (given, total_impact) {
            (Some(p), _) => p,
            (None, Some(total)) if total > 0.0 => impact / total * 100.0,
            (None, _) => 0.0,
        };
        stage_breakdown.push(StageShare { stage, impact, percentage });
    }

    let market_shares = match &mapping.market_shares {
        None => Vec::new(),
        Some(MarketShareColumns::Encoded { column }) => match row.cell(column) {
            Cell::Missing => Vec::new(),
            Cell::Text(s) => parse_encoded_shares(&s)?,
            _ => return Err(RowError::new(format!("column `{column}` must hold encoded market shares"))),
        },
        Some(MarketShareColumns::Nested { field, region, share_pct, emissions }) => match row.cell(field) {
            Cell::Missing => Vec::new(),
            Cell::List(items) => items
                .iter()
                .map(|item| {
                    let obj = item.as_object().ok_or_else(|| RowError::new("market share entry is not an object"))?;
                    let region = text_of(obj.cell(region)).ok_or_else(|| RowError::new("market share without region"))?;
                    let share_pct = number(obj, share_pct)?.ok_or_else(|| RowError::new("market share without share"))?;
                    let emissions = match emissions {
                        Some(col) => non_negative(number(obj, col)?, col)?,
                        None => None,
                    };
                    Ok(MarketShare { region: crate::region::normalize(&region), share_pct, emissions })
                })
                .collect::<Result<_, RowError>>()?,
            _ => return Err(RowError::new(format!("field `{field}` must be a list of market shares"))),
        },
    };

    let mut rec = ProductRecord {
        product_id: product_id(source, name, &region),
        source,
        name: name.to_string(),
        region,
        reference_quantity_g,
        total_impact,
        quality_rating,
        stage_breakdown,
        market_shares,
    };
    rec.normalize_reference();
    Ok(rec)
}

fn parse_encoded_shares(raw: &str) -> Result<Vec<MarketShare>, RowError> {
    raw.split(';')
        .map(str::trim)
        .filter(|part| !part.is_empty())
        .map(|part| {
            let fields: Vec<&str> = part.split(':').map(str::trim).collect();
            let bad = || RowError::new(format!("malformed market share `{part}`"));
            let (region, share, emissions) = match fields.as_slice() {
                [r, s] => (*r, *s, None),
                [r, s, e] => (*r, *s, Some(*e)),
                _ => return Err(bad()),
            };
            let share_pct = parse_number(share).ok_or_else(bad)?;
            let emissions = match emissions {
                Some(e) if !e.is_empty() => Some(parse_number(e).ok_or_else(bad)?),
                _ => None,
            };
            if emissions.is_some_and(|e| e < 0.0) {
                return Err(bad());
            }
            Ok(MarketShare { region: crate::region::normalize(region), share_pct, emissions })
        })
        .collect()
}
