//! Confidence-guided zooming for questions about high-resolution images.
//!
//! An image is decomposed into a tree of patches ([`geometry`]). For each
//! visual cue extracted from the question, a multimodal model
//! ([`oracle`]) scores patches with yes/no prompts and a best-first search
//! ([`search`]) descends the tree until a patch can answer the question.
//! The union of the found patches becomes the visual context for the final
//! answer. [`harness`] runs datasets and planted-target simulations, and
//! [`cli`] backs the `zoomeye` binary.
//!
//! ```no_run
//! use zoomeye::geometry::SourceImage;
//! use zoomeye::oracle::{HttpBackend, HttpConfig};
//! use zoomeye::search::{zoom_eye, CueExemplars, SearchConfig};
//!
//! let backend = HttpBackend::new(HttpConfig::from_env()?);
//! let image = SourceImage::open("street.jpg")?;
//! let outcome = zoom_eye(
//!     &image,
//!     "What color is the umbrella?",
//!     &SearchConfig::local(),
//!     &backend,
//!     &CueExemplars::v_star(),
//! )?;
//! println!("{}", outcome.answer);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod oracle;
pub mod search;

pub use error::{GeometryError, HarnessError, OracleError, SearchError};
