#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use mg_emotion::{ChatClient, EndpointConfig, Result, Transport};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Transport that only counts how often it is called.
#[derive(Clone, Default)]
pub struct CountingTransport {
    pub calls: Arc<AtomicUsize>,
}

impl CountingTransport {
    pub fn count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Transport for CountingTransport {
    fn complete(&self, _: &EndpointConfig, _: &str, _: &str) -> Result<String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(String::new())
    }
}

/// Mock client over `fixtures()/<dir>` wired to a counting transport.
pub fn counted_mock(dir: &str) -> (ChatClient, CountingTransport) {
    let counter = CountingTransport::default();
    let client = ChatClient::new(EndpointConfig::default(), Box::new(counter.clone())).with_mock(fixtures().join(dir));
    (client, counter)
}
