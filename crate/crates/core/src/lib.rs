//! Cradle-to-gate carbon-footprint estimation for composite meals.
//!
//! The engine runs a four-step flow over three food LCA catalogs
//! (BONSAI, Agribalyse, Big Climate Database):
//!
//! 1. [`recipe`] turns a free-text recipe into gram-quantified ingredients.
//! 2. [`embedding`] and [`matching`] propose database products per ingredient
//!    and record the user's confirmations.
//! 3. [`query`] pulls the impact data for confirmed products, with country
//!    fallback, and renders the results text.
//! 4. [`aggregate`] and [`report`] compute ranges, cooking estimates, totals,
//!    equivalences, chart data and follow-up questions.
//!
//! All arithmetic lives in this crate. The [`llm`] gateway is only used for
//! extraction, prose and the follow-up chat; its numbers never reach totals.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregate;
pub mod catalog;
pub mod embedding;
pub mod llm;
pub mod matching;
pub mod num;
pub mod pipeline;
pub mod query;
pub mod recipe;
pub mod region;
pub mod report;

pub use aggregate::{CookingImpact, CookingMethod, IngredientImpact, RecipeAssessment};
pub use catalog::{DatabaseSource, MarketShare, ProductKey, ProductRecord, Stage, StageShare};
pub use pipeline::{Engine, EngineConfig};
pub use recipe::{ParsedIngredient, Provenance, RawRecipe};
