//! Equivalences, report text, chart data and follow-up questions.

use std::collections::BTreeSet;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::aggregate::{CookingMethod, IngredientImpact, RecipeAssessment};
use crate::catalog::DatabaseSource;
use crate::num::{format_sig, round_sig};
use crate::query::IngredientQueryResult;
use crate::region;

/// Significant figures for every number in the report.
pub const REPORT_DIGITS: usize = 3;
pub const DEFAULT_EQUIVALENCES: usize = 3;
/// Counts in this range read naturally and are preferred.
pub const RELATABLE_RANGE: (f64, f64) = (0.5, 500.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceActivity {
    pub id: &'static str,
    pub label: &'static str,
    /// kg CO2-eq per unit of activity.
    pub kg_per_unit: f64,
    /// Sentence with `{n}` for the count.
    pub phrase: &'static str,
}

pub const REFERENCE_ACTIVITIES: [ReferenceActivity; 8] = [
    ReferenceActivity { id: "email", label: "Sending an email", kg_per_unit: 0.004, phrase: "Sending approximately {n} emails" },
    ReferenceActivity { id: "web_search", label: "Web search on a laptop", kg_per_unit: 0.0007, phrase: "Running approximately {n} web searches on a laptop" },
    // Per hour of viewing.
    ReferenceActivity { id: "tv", label: "Watching TV 42-inch plasma", kg_per_unit: 0.24, phrase: "Watching TV on a 42-inch plasma screen for about {n} hours" },
    ReferenceActivity { id: "fiat_mile", label: "Driving 1 mile Fiat 500", kg_per_unit: 0.35, phrase: "Driving 1 mile in a Fiat 500 approximately {n} times" },
    ReferenceActivity { id: "shower", label: "3-minute shower", kg_per_unit: 0.09, phrase: "Taking approximately {n} 3-minute showers" },
    ReferenceActivity { id: "phone_charge", label: "Charging phone daily", kg_per_unit: 0.003, phrase: "Charging a phone for approximately {n} days" },
    ReferenceActivity { id: "laptop_hour", label: "Using laptop 1 hour", kg_per_unit: 0.05, phrase: "Using a laptop for about {n} hours" },
    ReferenceActivity { id: "dish_washing", label: "Hand washing dishes", kg_per_unit: 8.0, phrase: "Hand washing dishes approximately {n} times" },
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equivalence {
    pub activity: String,
    pub label: String,
    /// `total / kg_per_unit`, unrounded.
    pub exact: f64,
    /// `exact` at three significant figures.
    pub count: f64,
    pub text: String,
}

fn equivalence(total: f64, a: &ReferenceActivity) -> Equivalence {
    let exact = total / a.kg_per_unit;
    Equivalence {
        activity: a.id.to_string(),
        label: a.label.to_string(),
        exact,
        count: round_sig(exact, REPORT_DIGITS),
        text: a.phrase.replace("{n}", &format_sig(exact, REPORT_DIGITS)),
    }
}

/// Every activity scaled to `total`, in table order.
pub fn all_equivalences(total: f64, table: &[ReferenceActivity]) -> Vec<Equivalence> {
    table.iter().map(|a| equivalence(total, a)).collect()
}

/// `n` comparisons: relatable counts first in table order, then the closest
/// remaining ones by log distance to the relatable range.
pub fn equivalences(total: f64, table: &[ReferenceActivity], n: usize) -> Vec<Equivalence> {
    let all = all_equivalences(total, table);
    let (lo, hi) = RELATABLE_RANGE;
    let relatable = |e: &Equivalence| e.exact >= lo && e.exact <= hi;
    let mut picked: Vec<usize> = (0..all.len()).filter(|&i| relatable(&all[i])).take(n).collect();
    if picked.len() < n {
        let distance = |e: &Equivalence| {
            if e.exact <= 0.0 {
                f64::INFINITY
            } else if e.exact < lo {
                (lo / e.exact).ln()
            } else {
                (e.exact / hi).ln()
            }
        };
        let mut rest: Vec<usize> = (0..all.len()).filter(|i| !picked.contains(i)).collect();
        rest.sort_by(|a, b| distance(&all[*a]).total_cmp(&distance(&all[*b])).then(a.cmp(b)));
        picked.extend(rest.into_iter().take(n - picked.len()));
        picked.sort();
    }
    picked.into_iter().map(|i| all[i].clone()).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VisualizationData {
    pub ingredients: Vec<String>,
    pub impacts: Vec<f64>,
}

pub const COOKING_LABEL: &str = "Cooking";

/// Midpoints in recipe order, plus cooking when required. No total entry.
pub fn visualization_data(assessment: &RecipeAssessment) -> VisualizationData {
    let mut data = VisualizationData::default();
    for i in assessment.ingredients.iter().filter(|i| i.matched) {
        data.ingredients.push(i.ingredient.clone());
        data.impacts.push(i.midpoint);
    }
    if assessment.cooking.required {
        data.ingredients.push(COOKING_LABEL.to_string());
        data.impacts.push(assessment.cooking.midpoint);
    }
    data
}

/// Descending midpoint, ties by ingredient name.
pub fn ranked(assessment: &RecipeAssessment) -> Vec<&IngredientImpact> {
    let mut v: Vec<&IngredientImpact> = assessment.ingredients.iter().filter(|i| i.matched).collect();
    v.sort_by(|a, b| b.midpoint.total_cmp(&a.midpoint).then_with(|| a.ingredient.cmp(&b.ingredient)));
    v
}

fn range(min: f64, max: f64) -> String {
    let (lo, hi) = (format_sig(min, REPORT_DIGITS), format_sig(max, REPORT_DIGITS));
    if lo == hi {
        format!("{lo} kg CO2-eq")
    } else {
        format!("{lo}-{hi} kg CO2-eq")
    }
}

fn capitalized(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn grams(g: f64) -> String {
    format_sig(g, 4)
}

pub const MARKET_QUESTION: &str = "What are the market shares of the ingredients used in this recipe?";
pub const COUNTRY_QUESTION: &str = "How do the impacts of these ingredients vary between different countries?";
pub const LIFECYCLE_QUESTION: &str = "Are there any lifecycle patterns that stand out for the ingredients?";
pub const REDUCTION_QUESTION: &str = "What are some potential opportunities to reduce the carbon footprint of this recipe?";

/// Three or four questions keyed on what the data contains.
pub fn follow_up_questions(assessment: &RecipeAssessment, results: &[IngredientQueryResult]) -> Vec<String> {
    let has_shares = results.iter().flat_map(|r| &r.entries).any(|e| !e.market_shares.is_empty());
    let has_fallback = assessment.ingredients.iter().any(IngredientImpact::has_fallback);
    let mut out = Vec::with_capacity(4);
    if has_shares {
        out.push(MARKET_QUESTION.to_string());
    }
    if has_fallback {
        out.push(COUNTRY_QUESTION.to_string());
    }
    out.push(LIFECYCLE_QUESTION.to_string());
    out.push(REDUCTION_QUESTION.to_string());
    if out.len() < 3 {
        let widest = assessment
            .ingredients
            .iter()
            .filter(|i| i.max > i.min)
            .max_by(|a, b| (a.max - a.min).total_cmp(&(b.max - b.min)).then_with(|| b.ingredient.cmp(&a.ingredient)));
        out.push(match widest {
            Some(i) => format!("Why do the databases disagree on the impact of {}?", i.ingredient),
            None => "Which ingredient contributes most to the total impact?".to_string(),
        });
    }
    out.truncate(4);
    out
}

fn method_name(m: CookingMethod) -> &'static str {
    match m {
        CookingMethod::Bake => "Baking",
        CookingMethod::Boil => "Boiling",
        CookingMethod::Fry => "Frying",
        CookingMethod::Simmer => "Simmering",
        CookingMethod::None => "None",
    }
}

/// Plain-text report in a fixed section order. All figures come from `assessment`.
pub fn build_report(assessment: &RecipeAssessment, questions: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Main ingredients by impact:");
    let ranked = ranked(assessment);
    if ranked.is_empty() {
        let _ = writeln!(out, "- No ingredients could be matched to database products.");
    }
    for i in &ranked {
        let _ = writeln!(
            out,
            "- {} ({}g): {} (note: data from {})",
            capitalized(&i.ingredient),
            grams(i.grams),
            range(i.min, i.max),
            region::join_names(i.regions())
        );
    }
    for i in assessment.ingredients.iter().filter(|i| !i.matched) {
        let _ = writeln!(out, "- {} ({}g): no matching product selected, excluded from totals", capitalized(&i.ingredient), grams(i.grams));
    }
    out.push('\n');

    let _ = writeln!(out, "Cooking impact:");
    let c = &assessment.cooking;
    if c.required {
        let temp = c.temperature_c.map(|t| format!(" at {}°C", format_sig(t, 4))).unwrap_or_default();
        let _ = writeln!(out, "- {} ({} mins{temp}): {}", method_name(c.method), format_sig(c.duration_min, 4), range(c.min, c.max));
    } else {
        let _ = writeln!(out, "- No cooking required (0 kg CO2-eq)");
    }
    out.push('\n');

    let _ = writeln!(out, "Total recipe impact: {}", range(assessment.total_min, assessment.total_max));
    let _ = writeln!(out, "Average impact: {} kg CO2-eq", format_sig(assessment.total_avg, REPORT_DIGITS));
    out.push('\n');

    let _ = writeln!(out, "Your meal's carbon footprint is equivalent to:");
    for e in &assessment.equivalences {
        let _ = writeln!(out, "- {}", e.text);
    }
    out.push('\n');

    let _ = writeln!(out, "{}", sources_paragraph(assessment));
    out.push('\n');

    let _ = writeln!(out, "You might want to know more about:");
    for q in questions {
        let _ = writeln!(out, "- {q}");
    }
    out
}

fn sources_paragraph(assessment: &RecipeAssessment) -> String {
    let sources: BTreeSet<DatabaseSource> =
        assessment.ingredients.iter().flat_map(|i| i.contributions.iter().map(|c| c.source)).collect();
    let names: Vec<&str> = sources.iter().map(|s| s.display_name()).collect();
    let mut p = String::new();
    if names.is_empty() {
        p.push_str("No database results were used.");
    } else {
        let joined = match names.as_slice() {
            [one] => one.to_string(),
            [init @ .., last] => format!("{} and {last}", init.join(", ")),
            [] => unreachable!(),
        };
        let _ = write!(
            p,
            "The data sources include {joined}. Each range spans the lowest and highest impact among the products selected for an ingredient, and the average adds up the midpoints of those ranges."
        );
    }
    if assessment.ingredients.iter().any(IngredientImpact::has_fallback) {
        p.push_str(" Where a product has no record for the target country, the values are averaged over the regions that have one.");
    }
    let c = &assessment.cooking;
    if c.required {
        let _ = write!(
            p,
            " Cooking is estimated from {} kW of appliance power for {} minutes at {} kg CO2-eq per kWh, with a 20% margin either way.",
            format_sig(c.power_kw, 3),
            format_sig(c.duration_min, 4),
            format_sig(c.grid_factor, 3)
        );
    } else {
        p.push_str(" No cooking is required, so the total reflects only the ingredients.");
    }
    if !assessment.unmatched.is_empty() {
        let _ = write!(p, " Not included for lack of a selected product: {}.", assessment.unmatched.join(", "));
    }
    p
}
