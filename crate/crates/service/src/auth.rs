//! Clocks and opaque bearer tokens.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use hyperadapt_core::Timestamp;
use rand::RngCore;
use serde::{Deserialize, Serialize};

pub trait Clock: Send + Sync {
    fn now(&self) -> Timestamp;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Timestamp {
        Timestamp::now()
    }
}

/// Test clock: starts at a fixed instant and moves only when told to.
#[derive(Debug, Default)]
pub struct FixedClock(AtomicU64);

impl FixedClock {
    pub fn new(start: Timestamp) -> Self {
        FixedClock(AtomicU64::new(start.millis()))
    }

    pub fn advance(&self, millis: u64) {
        self.0.fetch_add(millis, Ordering::SeqCst);
    }

    pub fn set(&self, at: Timestamp) {
        self.0.store(at.millis(), Ordering::SeqCst);
    }
}

impl Clock for FixedClock {
    fn now(&self) -> Timestamp {
        Timestamp(self.0.load(Ordering::SeqCst))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionToken {
    pub learner_id: String,
    pub issued_at: Timestamp,
    pub expiry: Timestamp,
}

impl SessionToken {
    pub fn is_live(&self, now: Timestamp) -> bool {
        now < self.expiry
    }
}

/// In-memory token table. Tokens are 256-bit random hex strings.
#[derive(Debug, Default)]
pub struct TokenTable {
    tokens: Mutex<HashMap<String, SessionToken>>,
}

impl TokenTable {
    pub fn issue(&self, learner_id: &str, now: Timestamp, ttl_secs: u64) -> (String, SessionToken) {
        let mut bytes = [0u8; 32];
        rand::rng().fill_bytes(&mut bytes);
        let token = hex::encode(bytes);
        let session = SessionToken {
            learner_id: learner_id.to_string(),
            issued_at: now,
            expiry: now.plus_millis(ttl_secs.saturating_mul(1000)),
        };
        let mut table = self.tokens.lock().expect("token table poisoned");
        table.retain(|_, s| s.is_live(now));
        table.insert(token.clone(), session.clone());
        (token, session)
    }

    /// The live session for `token`, if any.
    pub fn resolve(&self, token: &str, now: Timestamp) -> Option<SessionToken> {
        let table = self.tokens.lock().expect("token table poisoned");
        table.get(token).filter(|s| s.is_live(now)).cloned()
    }
}
