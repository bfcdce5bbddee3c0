//! Color-naming agents in referential games.
//!
//! Speakers and listeners are small feed-forward networks that first learn a
//! color lexicon from human naming data and then adapt it by playing
//! referential games, optionally against a population of listeners. The
//! resulting lexicons are scored for communicative accuracy, informativeness,
//! lexical diversity, convexity in CIELAB, drift from the human lexicon, and
//! sensitivity to context difficulty.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix it to `f64`.

pub mod agents;
pub mod colorspace;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod metrics;
pub mod neuralnet;
pub mod scalar;
pub mod training;

pub use colorspace::{delta_e, hsl_to_cielab, ColorChip, HslColor};
pub use dataset::{Condition, Corpus, Trial};
pub use error::{Error, Result};
pub use geometry::{contains, convex_hull, Hull};
pub use metrics::{Lexicon, WordStats};
pub use scalar::Scalar;

pub type Mlp = neuralnet::Mlp<f64>;
pub type DenseLayer = neuralnet::DenseLayer<f64>;
pub type Speaker = agents::Speaker<f64>;
pub type Listener = agents::Listener<f64>;
