//! LRU cache of post-processed suggestions with a time-to-live.

use std::num::NonZeroUsize;

use lru::LruCache;
use serde::Serialize;
use sha2::{Digest, Sha256};

use ghostline_core::{FimPrompt, GenerationParams, SuggestionKind};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey {
    prefix: [u8; 32],
    suffix: [u8; 32],
    kind: SuggestionKind,
    params: [u8; 32],
}

impl CacheKey {
    /// Keyed on the window-limited prompt, so edits outside the windows do
    /// not change the key.
    pub fn new(prompt: &FimPrompt, kind: SuggestionKind, params: &GenerationParams) -> Self {
        let params = serde_json::to_vec(params).expect("params serialize");
        Self {
            prefix: Sha256::digest(prompt.prefix.as_bytes()).into(),
            suffix: Sha256::digest(prompt.suffix.as_bytes()).into(),
            kind,
            params: Sha256::digest(&params).into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CacheEntry {
    pub text: String,
    pub created_at_ms: u64,
    pub hit_count: u64,
}

pub struct CompletionCache {
    entries: LruCache<CacheKey, CacheEntry>,
    ttl_ms: u64,
}

impl CompletionCache {
    pub fn new(capacity: NonZeroUsize, ttl_ms: u64) -> Self {
        Self {
            entries: LruCache::new(capacity),
            ttl_ms,
        }
    }

    pub fn get(&mut self, key: &CacheKey, now_ms: u64) -> Option<String> {
        let expired = self
            .entries
            .peek(key)
            .is_some_and(|e| now_ms.saturating_sub(e.created_at_ms) >= self.ttl_ms);
        if expired {
            self.entries.pop(key);
            return None;
        }
        let entry = self.entries.get_mut(key)?;
        entry.hit_count += 1;
        Some(entry.text.clone())
    }

    pub fn insert(&mut self, key: CacheKey, text: String, now_ms: u64) {
        self.entries.put(
            key,
            CacheEntry {
                text,
                created_at_ms: now_ms,
                hit_count: 0,
            },
        );
    }

    pub fn peek(&self, key: &CacheKey) -> Option<&CacheEntry> {
        self.entries.peek(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}
