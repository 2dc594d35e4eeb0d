//! Cheap deterministic tokenizer used to enforce token limits without a model.

/// Splits text into token spans. Implementations must be deterministic.
pub trait Tokenizer: Send + Sync {
    /// Byte ranges of the tokens in `text`, in order.
    fn spans(&self, text: &str) -> Vec<(usize, usize)>;

    fn count(&self, text: &str) -> usize {
        self.spans(text).len()
    }

    /// Byte length of the shortest prefix of `text` holding `max` tokens, or
    /// the whole text when it has fewer.
    fn prefix_len(&self, text: &str, max: usize) -> usize {
        if max == 0 {
            return 0;
        }
        let spans = self.spans(text);
        match spans.get(max - 1) {
            Some(&(_, end)) if spans.len() > max => end,
            _ => text.len(),
        }
    }
}

/// Word pieces: maximal runs of alphanumerics and `_` are one token, every
/// other non-whitespace character is a token on its own, whitespace is free.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WordPieceTokenizer;

impl Tokenizer for WordPieceTokenizer {
    fn spans(&self, text: &str) -> Vec<(usize, usize)> {
        let mut spans = Vec::new();
        let mut word: Option<usize> = None;
        for (i, c) in text.char_indices() {
            let wordy = c.is_alphanumeric() || c == '_';
            if wordy {
                word.get_or_insert(i);
                continue;
            }
            if let Some(start) = word.take() {
                spans.push((start, i));
            }
            if !c.is_whitespace() {
                spans.push((i, i + c.len_utf8()));
            }
        }
        if let Some(start) = word {
            spans.push((start, text.len()));
        }
        spans
    }
}

/// Count tokens with the default tokenizer.
pub fn token_count(text: &str) -> usize {
    WordPieceTokenizer.count(text)
}
