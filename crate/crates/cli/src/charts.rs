//! Static PNG renderings of an assessment's chart data.

use std::path::Path;
use std::sync::Once;

use anyhow::{anyhow, Result};
use plotters::coord::Shift;
use plotters::prelude::*;

use mealprint_core::RecipeAssessment;

const FONT: &[u8] = include_bytes!("../assets/DejaVuSans.ttf");
const BAR_SIZE: (u32, u32) = (900, 520);
const PIE_SIZE: (u32, u32) = (760, 620);

const PALETTE: [RGBColor; 8] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
    RGBColor(127, 127, 127),
];

fn register_font() {
    static ONCE: Once = Once::new();
    ONCE.call_once(|| {
        let _ = plotters::style::register_font("sans-serif", FontStyle::Normal, FONT);
    });
}

fn err<E: std::fmt::Debug>(e: E) -> anyhow::Error {
    anyhow!("chart rendering failed: {e:?}")
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Non-zero entries of the chart data, largest first.
fn slices(assessment: &RecipeAssessment) -> Vec<(String, f64)> {
    let v = &assessment.visualization;
    let mut out: Vec<(String, f64)> =
        v.ingredients.iter().map(|s| capitalize(s)).zip(v.impacts.iter().copied()).filter(|(_, x)| *x > 0.0).collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

fn empty(root: &DrawingArea<BitMapBackend, Shift>, size: (u32, u32)) -> Result<()> {
    root.draw(&Text::new(
        "No impact to display",
        (size.0 as i32 / 2 - 110, size.1 as i32 / 2),
        ("sans-serif", 26).into_font().color(&BLACK),
    ))
    .map_err(err)
}

/// Horizontal bar per ingredient midpoint, largest on top.
pub fn bar(assessment: &RecipeAssessment, path: &Path) -> Result<()> {
    register_font();
    let data = slices(assessment);
    let root = BitMapBackend::new(path, BAR_SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(err)?;
    if data.is_empty() {
        empty(&root, BAR_SIZE)?;
        return root.present().map_err(err);
    }
    let n = data.len() as i32;
    let max = data[0].1 * 1.15;
    let mut chart = ChartBuilder::on(&root)
        .caption("Impact per ingredient", ("sans-serif", 26))
        .margin(16)
        .x_label_area_size(44)
        .y_label_area_size(190)
        .build_cartesian_2d(0.0..max, (0..n - 1).into_segmented())
        .map_err(err)?;
    let label = |v: &SegmentValue<i32>| match v {
        SegmentValue::CenterOf(i) => data.get((n - 1 - i) as usize).map(|d| d.0.clone()).unwrap_or_default(),
        _ => String::new(),
    };
    chart
        .configure_mesh()
        .disable_y_mesh()
        .light_line_style(TRANSPARENT)
        .x_desc("kg CO2-eq")
        .y_label_formatter(&label)
        .y_labels(data.len())
        .label_style(("sans-serif", 15))
        .draw()
        .map_err(err)?;
    chart
        .draw_series(data.iter().enumerate().map(|(rank, (_, value))| {
            let row = n - 1 - rank as i32;
            let mut r = Rectangle::new(
                [(0.0, SegmentValue::Exact(row)), (*value, SegmentValue::Exact(row + 1))],
                PALETTE[rank % PALETTE.len()].filled(),
            );
            r.set_margin(6, 6, 0, 0);
            r
        }))
        .map_err(err)?;
    root.present().map_err(err)
}

/// Share of the average total per ingredient, cooking included.
pub fn pie(assessment: &RecipeAssessment, path: &Path) -> Result<()> {
    register_font();
    let data = slices(assessment);
    let root = BitMapBackend::new(path, PIE_SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(err)?;
    if data.is_empty() {
        empty(&root, PIE_SIZE)?;
        return root.present().map_err(err);
    }
    root.draw(&Text::new("Share of total impact", (20, 16), ("sans-serif", 26).into_font().color(&BLACK)))
        .map_err(err)?;
    let sizes: Vec<f64> = data.iter().map(|d| d.1).collect();
    let labels: Vec<&str> = data.iter().map(|d| d.0.as_str()).collect();
    let colors: Vec<RGBColor> = (0..data.len()).map(|i| PALETTE[i % PALETTE.len()]).collect();
    let center = (PIE_SIZE.0 as i32 / 2, PIE_SIZE.1 as i32 / 2 + 20);
    let radius = 210.0;
    let mut pie = Pie::new(&center, &radius, &sizes, &colors, &labels);
    pie.start_angle(-90.0);
    pie.label_style(("sans-serif", 16).into_font().color(&BLACK));
    pie.percentages(("sans-serif", 15).into_font().color(&WHITE));
    root.draw(&pie).map_err(err)?;
    root.present().map_err(err)
}
