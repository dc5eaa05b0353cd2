use std::collections::BTreeMap;

use serde::Serialize;

use super::ProductRecord;

/// Tolerance on the sum of market shares for source rounding.
pub const MARKET_SHARE_SUM_LIMIT: f64 = 100.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    DuplicateId,
    EmptyName,
    EmptyRegion,
    NonPositiveReference { value: f64 },
    NegativeImpact { field: String, value: f64 },
    PercentageOutOfRange { field: String, value: f64 },
    MarketSharesExceed { sum: f64 },
    StageNotAllowed { stage: super::Stage },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub product_id: String,
    #[serde(flatten)]
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub records: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    /// A store is only accepted with zero hard violations.
    pub fn accepted(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn duplicates(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.kind == ViolationKind::DuplicateId)
    }
}

pub fn validate_store(records: &[ProductRecord]) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();

    for rec in records {
        let mut push = |kind| violations.push(Violation { product_id: rec.product_id.clone(), kind });

        let count = seen.entry(rec.product_id.as_str()).or_default();
        *count += 1;
        if *count == 2 {
            push(ViolationKind::DuplicateId);
        }
        if rec.name.trim().is_empty() {
            push(ViolationKind::EmptyName);
        }
        if rec.region.trim().is_empty() {
            push(ViolationKind::EmptyRegion);
        }
        if !(rec.reference_quantity_g > 0.0) {
            push(ViolationKind::NonPositiveReference { value: rec.reference_quantity_g });
        }
        if let Some(total) = rec.total_impact {
            if !(total >= 0.0) {
                push(ViolationKind::NegativeImpact { field: "total_impact".into(), value: total });
            }
        }
        for stage in &rec.stage_breakdown {
            let field = format!("stage.{:?}", stage.stage).to_lowercase();
            if !stage.stage.allowed_for(rec.source) {
                push(ViolationKind::StageNotAllowed { stage: stage.stage });
            }
            if !(stage.impact >= 0.0) {
                push(ViolationKind::NegativeImpact { field: field.clone(), value: stage.impact });
            }
            if !(0.0..=100.0).contains(&stage.percentage) {
                push(ViolationKind::PercentageOutOfRange { field, value: stage.percentage });
            }
        }
        let mut share_sum = 0.0;
        for share in &rec.market_shares {
            let field = format!("market.{}", share.region);
            if !(0.0..=100.0).contains(&share.share_pct) {
                push(ViolationKind::PercentageOutOfRange { field: field.clone(), value: share.share_pct });
            }
            if let Some(e) = share.emissions {
                if !(e >= 0.0) {
                    push(ViolationKind::NegativeImpact { field, value: e });
                }
            }
            share_sum += share.share_pct;
        }
        if share_sum > MARKET_SHARE_SUM_LIMIT {
            push(ViolationKind::MarketSharesExceed { sum: share_sum });
        }
    }

    ValidationReport { records: records.len(), violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{DatabaseSource, MarketShare, Stage, StageShare};

    fn base() -> ProductRecord {
        ProductRecord::new(DatabaseSource::BigClimate, "Red onion", "NL", Some(0.0757))
    }

    #[test]
    fn clean_record_passes() {
        assert!(validate_store(&[base()]).accepted());
        assert!(validate_store(&[]).accepted());
    }

    #[test]
    fn negative_total_is_one_violation() {
        let mut rec = base();
        rec.total_impact = Some(-1.0);
        let report = validate_store(&[rec]);
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(report.violations[0].kind, ViolationKind::NegativeImpact { .. }));
    }

    #[test]
    fn duplicate_ids_reported_once() {
        let report = validate_store(&[base(), base(), base()]);
        assert_eq!(report.duplicates().count(), 1);
        assert!(!report.accepted());
    }

    #[test]
    fn percentage_and_share_bounds() {
        let mut rec = base();
        rec.stage_breakdown.push(StageShare { stage: Stage::Agriculture, impact: 0.01, percentage: 120.0 });
        rec.stage_breakdown.push(StageShare { stage: Stage::Consumption, impact: 0.01, percentage: 5.0 });
        rec.market_shares = vec![
            MarketShare { region: "IT".into(), share_pct: 60.0, emissions: Some(0.1) },
            MarketShare { region: "ES".into(), share_pct: 40.6, emissions: None },
        ];
        let kinds: Vec<_> = validate_store(&[rec]).violations.into_iter().map(|v| v.kind).collect();
        assert_eq!(kinds.len(), 3);
        assert!(kinds.iter().any(|k| matches!(k, ViolationKind::PercentageOutOfRange { .. })));
        assert!(kinds.iter().any(|k| matches!(k, ViolationKind::StageNotAllowed { stage: Stage::Consumption })));
        assert!(kinds.iter().any(|k| matches!(k, ViolationKind::MarketSharesExceed { .. })));
    }

    #[test]
    fn share_rounding_tolerated() {
        let mut rec = base();
        rec.market_shares = vec![
            MarketShare { region: "IT".into(), share_pct: 60.2, emissions: Some(0.1) },
            MarketShare { region: "ES".into(), share_pct: 40.2, emissions: None },
        ];
        assert!(validate_store(&[rec]).accepted());
    }
}
