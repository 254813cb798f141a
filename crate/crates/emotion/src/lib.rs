//! Emotion inference from masked interview dialogue with micro-gesture cues.
//!
//! A transcript is first masked by a chat model ([`mask_transcript`]), then
//! the masked dialogue, optionally with a micro-gesture event log, is sent
//! with the inference prompt several times. Replies are parsed into win/lose
//! confidences ([`parse_confidences`]) and scored as Acc@k
//! ([`score_accuracy`]). [`ChatClient::mock`] answers from a fixture
//! directory and never touches the network.

pub mod client;
pub mod error;
pub mod prompts;
pub mod protocol;
pub mod transcript;
pub mod vocabulary;

pub use client::{ChatClient, EndpointConfig, Transport};
pub use error::{EmotionError, Result};
pub use protocol::*;
pub use transcript::*;
pub use vocabulary::{canonical_label, MG_CATEGORIES};
