/// Reserved token ids.
pub const BEGIN: u32 = 0;
pub const SEPARATOR: u32 = 1;
pub const PAD: u32 = 2;
pub const UNKNOWN: u32 = 3;
pub const RESERVED: u32 = 4;

pub trait Tokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> Vec<u32>;
    fn vocab_size(&self) -> usize;

    /// Ids for text in segment `segment` of a multi-segment sequence. Segment 0 is
    /// plain [`Tokenizer::tokenize`].
    fn tokenize_segment(&self, text: &str, segment: u32) -> Vec<u32> {
        let _ = segment;
        self.tokenize(text)
    }
}

/// Lowercasing word/punctuation splitter that hashes tokens into a fixed id range.
///
/// Whitespace and `_` separate words; every other ASCII punctuation character is
/// a token of its own. Ids `0..4` are reserved. Words outside segment 0 hash
/// together with their segment index, so the same word after the first or second
/// separator is a distinct feature.
#[derive(Clone, Debug)]
pub struct HashingTokenizer {
    vocab_size: usize,
}

impl HashingTokenizer {
    pub fn new(vocab_size: usize) -> Self {
        assert!(vocab_size > RESERVED as usize, "vocabulary must exceed the reserved ids");
        HashingTokenizer { vocab_size }
    }

    pub fn words(text: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut current = String::new();
        for ch in text.chars() {
            if ch.is_whitespace() || ch == '_' {
                if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
            } else if ch.is_ascii_punctuation() {
                if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
                out.push(ch.to_string());
            } else {
                current.extend(ch.to_lowercase());
            }
        }
        if !current.is_empty() {
            out.push(current);
        }
        out
    }

    fn id(&self, word: &str, segment: u32) -> u32 {
        if word.chars().any(char::is_control) {
            return UNKNOWN;
        }
        // FNV-1a, stable across platforms and releases
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        let salt = if segment == 0 { Vec::new() } else { [&[0xFF], &segment.to_le_bytes()[..]].concat() };
        for &byte in salt.iter().chain(word.as_bytes()) {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
        RESERVED + (hash % (self.vocab_size as u64 - u64::from(RESERVED))) as u32
    }
}

impl Tokenizer for HashingTokenizer {
    fn tokenize(&self, text: &str) -> Vec<u32> {
        self.tokenize_segment(text, 0)
    }

    fn tokenize_segment(&self, text: &str, segment: u32) -> Vec<u32> {
        Self::words(text).iter().map(|w| self.id(w, segment)).collect()
    }

    fn vocab_size(&self) -> usize {
        self.vocab_size
    }
}
