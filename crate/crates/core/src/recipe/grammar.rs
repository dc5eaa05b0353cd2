//! Deterministic `quantity -> unit -> ingredient` grammar.

use super::conversion::{ConversionTable, UnitEntry};
use super::{normalize_name, ParsedIngredient, Provenance};

/// Outcome of the grammar over one message.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GrammarOutput {
    pub ingredients: Vec<ParsedIngredient>,
    /// List items that carried no recognizable quantity.
    pub skipped: Vec<String>,
}

const WORD_NUMBERS: &[(&str, f64)] = &[
    ("one", 1.0),
    ("two", 2.0),
    ("three", 3.0),
    ("four", 4.0),
    ("five", 5.0),
    ("six", 6.0),
    ("seven", 7.0),
    ("eight", 8.0),
    ("nine", 9.0),
    ("ten", 10.0),
    ("eleven", 11.0),
    ("twelve", 12.0),
    ("dozen", 12.0),
];

const CONNECTORS: &[&str] = &["and", "or", "plus", "with", "also"];

pub fn parse(text: &str, table: &ConversionTable) -> GrammarOutput {
    let mut out = GrammarOutput::default();
    for item in split_items(ingredient_section(text), table) {
        match parse_item(&item, table) {
            Some(ing) => out.ingredients.push(ing),
            None => {
                let cleaned = normalize_name(&item);
                if !cleaned.is_empty() {
                    out.skipped.push(cleaned);
                }
            }
        }
    }
    out
}

/// Text after an `ingredients:` marker, or the whole message.
fn ingredient_section(text: &str) -> &str {
    let lower = text.to_lowercase();
    // lowercasing can change byte offsets for non-ASCII text
    if lower.len() == text.len() {
        if let Some(pos) = lower.find("ingredients:") {
            return &text[pos + "ingredients:".len()..];
        }
    }
    text
}

fn split_items(text: &str, table: &ConversionTable) -> Vec<String> {
    let mut coarse = Vec::new();
    let mut current = String::new();
    let chars: Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        let sentence_end = matches!(c, '.' | '!' | '?')
            && chars.get(i + 1).is_none_or(|n| n.is_whitespace())
            && !(c == '.' && i > 0 && chars[i - 1].is_ascii_digit() && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit()));
        if matches!(c, ',' | ';' | '\n' | '\r' | '•') || sentence_end {
            coarse.push(std::mem::take(&mut current));
        } else {
            current.push(c);
        }
    }
    coarse.push(current);

    let mut items = Vec::new();
    for piece in coarse {
        let mut rest = piece.trim().trim_start_matches(['-', '*']).trim().to_string();
        // "x and 2 y" splits only where the right side starts with a quantity
        loop {
            let lower = rest.to_lowercase();
            let split = lower
                .match_indices(" and ")
                .map(|(i, _)| i)
                .find(|&i| starts_with_quantity(&lower[i + 5..], table));
            match split {
                Some(i) if lower.len() == rest.len() => {
                    items.push(rest[..i].trim().to_string());
                    rest = rest[i + 5..].trim().to_string();
                }
                _ => break,
            }
        }
        if !rest.trim().is_empty() {
            items.push(rest);
        }
    }
    items.retain(|s| !s.trim().is_empty());
    items
}

fn tokenize(item: &str) -> Vec<String> {
    item.to_lowercase()
        .replace(['(', ')', '[', ']', '"'], " ")
        .split_whitespace()
        .map(|t| t.trim_matches(|c: char| matches!(c, ':' | '!' | '?')).to_string())
        .filter(|t| !t.is_empty())
        .collect()
}

fn unicode_fraction(c: char) -> Option<f64> {
    Some(match c {
        '½' => 0.5,
        '¼' => 0.25,
        '¾' => 0.75,
        '⅓' => 1.0 / 3.0,
        '⅔' => 2.0 / 3.0,
        '⅛' => 0.125,
        _ => return None,
    })
}

/// Parses `12`, `1.5`, `1,5`, `1/2`, `½`, `1½`.
fn parse_number(token: &str) -> Option<f64> {
    if let Some((a, b)) = token.split_once('/') {
        let (a, b): (f64, f64) = (a.parse().ok()?, b.parse().ok()?);
        return (b != 0.0).then_some(a / b);
    }
    let mut chars = token.chars();
    if let Some(last) = token.chars().last().and_then(unicode_fraction) {
        chars.next_back();
        let whole = chars.as_str();
        return if whole.is_empty() { Some(last) } else { whole.parse::<f64>().ok().map(|w| w + last) };
    }
    if !token.starts_with(|c: char| c.is_ascii_digit()) {
        return None;
    }
    token.parse().ok().or_else(|| token.replace(',', ".").parse().ok())
}

/// Splits `200g` into `(200, "g")`.
fn split_glued(token: &str) -> Option<(f64, &str)> {
    let idx = token.find(|c: char| !(c.is_ascii_digit() || c == '.' || c == ','))?;
    if idx == 0 {
        return None;
    }
    let (num, unit) = token.split_at(idx);
    Some((parse_number(num)?, unit))
}

fn word_number(token: &str) -> Option<f64> {
    WORD_NUMBERS.iter().find(|(w, _)| *w == token).map(|(_, v)| *v)
}

fn is_article(token: &str) -> bool {
    matches!(token, "a" | "an")
}

struct Quantity<'t> {
    amount: f64,
    unit: Option<&'t UnitEntry>,
    consumed: usize,
    /// Count given as a number or number word, as opposed to an article.
    numeric: bool,
}

fn read_unit<'t>(tokens: &[String], at: usize, table: &'t ConversionTable) -> Option<(&'t UnitEntry, usize)> {
    let words: Vec<&str> = tokens[at..].iter().map(String::as_str).collect();
    table.match_unit(&words).map(|m| (m.entry, m.words))
}

/// Reads an amount and optional unit at the start of `tokens`.
fn read_quantity<'t>(tokens: &[String], table: &'t ConversionTable) -> Option<Quantity<'t>> {
    let first = tokens.first()?.as_str();
    let unit_after = |at: usize| read_unit(tokens, at, table);

    // 200g, 1.5kg
    if let Some((amount, unit)) = split_glued(first) {
        if let Some(entry) = table.unit(unit) {
            return Some(Quantity { amount, unit: Some(entry), consumed: 1, numeric: true });
        }
    }

    let mut amount = None;
    let mut at = 0;
    if let Some(n) = parse_number(first).or_else(|| word_number(first)) {
        amount = Some(n);
        at = 1;
        // mixed numbers: 1 1/2
        if let Some(frac) = tokens.get(1).filter(|t| t.contains('/')).and_then(|t| parse_number(t)) {
            amount = Some(n + frac);
            at = 2;
        }
    } else if first == "half" || (is_article(first) && tokens.get(1).is_some_and(|t| t == "half")) {
        at = if first == "half" { 1 } else { 2 };
        if tokens.get(at).is_some_and(|t| is_article(t)) {
            at += 1;
        }
        // "half a cup of x" halves the following unit
        return match unit_after(at).filter(|(u, _)| u.unit != "half") {
            Some((unit, n)) => Some(Quantity { amount: 0.5, unit: Some(unit), consumed: at + n, numeric: true }),
            None => {
                let half = table.unit("half")?;
                Some(Quantity { amount: 1.0, unit: Some(half), consumed: at, numeric: false })
            }
        };
    } else if is_article(first) && tokens.get(1).is_some_and(|t| t == "couple") {
        at = 2;
        if tokens.get(at).is_some_and(|t| t == "of") {
            at += 1;
        }
        let unit = unit_after(at);
        return Some(Quantity {
            amount: 2.0,
            unit: unit.map(|(u, _)| u),
            consumed: at + unit.map_or(0, |(_, n)| n),
            numeric: true,
        });
    } else if is_article(first) {
        let (unit, n) = unit_after(1)?;
        return Some(Quantity { amount: 1.0, unit: Some(unit), consumed: 1 + n, numeric: false });
    } else if let Some((unit, n)) = unit_after(0).filter(|(u, _)| u.provenance == Provenance::Estimated) {
        // bare vague units: "pinch of salt", "few olives"
        return Some(Quantity { amount: 1.0, unit: Some(unit), consumed: n, numeric: false });
    }

    let amount = amount?;
    let unit = unit_after(at);
    Some(Quantity {
        amount,
        unit: unit.map(|(u, _)| u),
        consumed: at + unit.map_or(0, |(_, n)| n),
        numeric: true,
    })
}

fn starts_with_quantity(text: &str, table: &ConversionTable) -> bool {
    let tokens = tokenize(text);
    match read_quantity(&tokens, table) {
        Some(q) => q.numeric || q.unit.is_some(),
        None => false,
    }
}

fn parse_item(item: &str, table: &ConversionTable) -> Option<ParsedIngredient> {
    let mut tokens = tokenize(item);
    while tokens.first().is_some_and(|t| CONNECTORS.contains(&t.as_str())) {
        tokens.remove(0);
    }
    let (start, quantity) = match read_quantity(&tokens, table) {
        Some(q) => (0, q),
        // a quantity further into the fragment: "impact of 200g of pasta"
        None => (1..tokens.len())
            .find_map(|i| {
                let tail = &tokens[i..];
                let numeric = parse_number(&tail[0]).is_some() || split_glued(&tail[0]).is_some();
                numeric.then(|| read_quantity(tail, table)).flatten().map(|q| (i, q))
            })?,
    };

    let mut rest = &tokens[start + quantity.consumed..];
    if rest.first().is_some_and(|t| t == "of") {
        rest = &rest[1..];
    }
    let name = normalize_name(&rest.join(" "));
    if name.is_empty() {
        return None;
    }

    let class = table.classify(&name);
    let (unit, provenance) = match quantity.unit {
        Some(entry) => (entry.unit.as_str(), entry.provenance),
        None => ("piece", Provenance::Estimated),
    };
    let grams = table.convert_quantity(quantity.amount, unit, class).ok()?;
    if !(grams > 0.0) || !grams.is_finite() {
        return None;
    }
    Some(ParsedIngredient { name, grams, provenance })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(text: &str) -> Vec<(String, f64)> {
        parse(text, &ConversionTable::default()).ingredients.into_iter().map(|i| (i.name, i.grams)).collect()
    }

    fn p(name: &str, g: f64) -> (String, f64) {
        (name.to_string(), g)
    }

    #[test]
    fn explicit_grams() {
        let out = parse("200g of pizza dough", &ConversionTable::default());
        assert_eq!(out.ingredients.len(), 1);
        assert_eq!(out.ingredients[0].name, "pizza dough");
        assert_eq!(out.ingredients[0].grams, 200.0);
        assert_eq!(out.ingredients[0].provenance, Provenance::Explicit);
    }

    #[test]
    fn tablespoons_converted() {
        let out = parse("2 tablespoons of oil", &ConversionTable::default());
        assert_eq!(out.ingredients[0].grams, 30.0);
        assert_eq!(out.ingredients[0].provenance, Provenance::Converted);
    }

    #[test]
    fn vague_quantities() {
        assert_eq!(pairs("a handful of spinach"), vec![p("spinach", 30.0)]);
        assert_eq!(pairs("half a red onion"), vec![p("red onion", 70.0)]);
        assert_eq!(pairs("half a cup of flour"), vec![p("flour", 60.0)]);
        assert_eq!(pairs("a pinch of salt"), vec![p("salt", 1.0)]);
        assert_eq!(pairs("a couple of eggs"), vec![p("eggs", 100.0)]);
        assert_eq!(pairs("2 eggs"), vec![p("eggs", 100.0)]);
        assert_eq!(pairs("three tomatoes"), vec![p("tomatoes", 360.0)]);
    }

    #[test]
    fn numbers() {
        assert_eq!(pairs("1 1/2 cups flour"), vec![p("flour", 180.0)]);
        assert_eq!(pairs("½ cup sugar"), vec![p("sugar", 100.0)]);
        assert_eq!(pairs("1.5 kg potatoes"), vec![p("potatoes", 1500.0)]);
        assert_eq!(pairs("250 ml milk"), vec![p("milk", 250.0)]);
        assert_eq!(pairs("2 fl oz cream"), vec![p("cream", 59.14)]);
    }

    #[test]
    fn splits_lists() {
        let text = "Ingredients:\n- 200g pasta\n- 100 g cheese and 2 tbsp olive oil\n- salt and pepper";
        let out = parse(text, &ConversionTable::default());
        let names: Vec<_> = out.ingredients.iter().map(|i| i.name.as_str()).collect();
        assert_eq!(names, vec!["pasta", "cheese", "olive oil"]);
        assert_eq!(out.skipped, vec!["salt and pepper"]);
    }

    #[test]
    fn quantity_inside_sentence() {
        assert_eq!(pairs("Please estimate the impact of 300g of rice."), vec![p("rice", 300.0)]);
    }

    #[test]
    fn zero_quantity_skipped() {
        let out = parse("0g of air", &ConversionTable::default());
        assert!(out.ingredients.is_empty());
    }
}
